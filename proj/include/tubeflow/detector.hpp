#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "tubeflow/events.hpp"
#include "tubeflow/kmeans.hpp"
#include "tubeflow/markov.hpp"
#include "tubeflow/window.hpp"

namespace tubeflow {

enum class ProbMode {
  incremental,  // rolling product of factors frozen at push time
  exact,        // recompute every factor from the current matrix
};

enum class UpdatePath {
  incremental,  // delta-adjusted Lloyd resume + matrix refresh
  rebuild,      // full Lloyd sweep + matrix recount (reference path)
};

enum class ExecutionOrder {
  train_first,  // detection reflects a model already updated with the event
  infer_first,  // detection reflects the model as of the previous event
};

struct ModelParams {
  std::int64_t window = 100;  // count mode: event count; time mode: time span
  std::size_t clusters = 5;
  int max_iters = 10;
  std::size_t seq_len = 5;
  double theta = 0.005;
  WindowMode window_mode = WindowMode::count;
  ProbMode prob_mode = ProbMode::incremental;
  std::size_t rebuild_every = 1024;
};

void validate_params(const ModelParams& p);

// Rolling product of the newest `seq_len` transition probabilities. Zero
// factors are tracked by count so the running product never divides by zero;
// a full recompute every `rebuild_every` pushes bounds drift. Steady-state
// cost is one divide plus one multiply per push.
class SequenceProbState {
 public:
  explicit SequenceProbState(std::size_t seq_len, std::size_t rebuild_every = 1024);

  void push(double factor);  // StateError unless factor is in [0, 1]
  bool full() const { return factors_.size() == seq_len_; }
  std::optional<double> probability() const;  // empty until `seq_len` factors arrive
  const std::deque<double>& factors() const { return factors_; }

  // Multiplies/divides spent maintaining the product; periodic rebuilds are
  // bookkeeping, not part of the per-push cost, and are excluded.
  std::uint64_t mul_div_ops() const { return ops_; }

 private:
  void rebuild();

  std::size_t seq_len_;
  std::size_t rebuild_every_;
  std::deque<double> factors_;
  double nonzero_product_ = 1.0;
  std::size_t zero_count_ = 0;
  std::uint64_t ops_ = 0;
  std::size_t pushes_since_rebuild_ = 0;
};

// Product of transition probabilities along `states`, one multiply per step
// (counted into *ops when given). Empty when fewer than two states.
std::optional<double> seq_prob_exact(const TransitionMatrix& m,
                                     std::span<const std::uint32_t> states,
                                     std::uint64_t* ops = nullptr);

// Per-sensor anomaly model: sliding window -> 1-d K-means cluster states ->
// first-order transition matrix -> probability of the newest length-N state
// sequence. An event is flagged anomalous when that probability is defined
// and falls strictly below theta. Cluster slots seed lazily: each new
// distinct value grows the clustering until `clusters` centers exist.
class AnomalyModel {
 public:
  AnomalyModel(std::int64_t sensor_id, const ModelParams& params,
               UpdatePath path = UpdatePath::incremental);

  // Slides the window, updates clustering / states / matrix, and appends the
  // newest transition factor. StateError on a foreign sensor_id.
  void train(const SensorEvent& e);

  // Scores the current sequence probability against theta. Does not modify
  // the model (the exact path only ticks its operation counter).
  DetectionEvent predict(const SensorEvent& e) const;

  DetectionEvent process(const SensorEvent& e, ExecutionOrder order);

  std::int64_t sensor_id() const { return sensor_id_; }
  const ModelParams& params() const { return params_; }
  UpdatePath path() const { return path_; }
  const EventWindow& window() const { return window_; }
  const Clustering& clustering() const { return clustering_; }  // empty before any event
  std::size_t k_effective() const { return clustering_.k_effective(); }
  const TransitionMatrix& matrix() const { return matrix_; }
  const std::vector<std::uint32_t>& states() const { return states_; }
  const SequenceProbState& sequence_prob() const { return prob_; }
  const LloydStats& last_train_stats() const { return last_stats_; }
  const LloydStats& cumulative_stats() const { return cumulative_stats_; }
  std::uint64_t exact_prob_ops() const { return exact_ops_; }
  std::uint64_t events_trained() const { return events_trained_; }

 private:
  std::int64_t sensor_id_;
  ModelParams params_;
  UpdatePath path_;
  EventWindow window_;
  Clustering clustering_;
  std::vector<std::uint32_t> states_;  // aligned with window entries
  TransitionMatrix matrix_;
  SequenceProbState prob_;
  LloydStats last_stats_;
  LloydStats cumulative_stats_;
  mutable std::uint64_t exact_ops_ = 0;
  std::uint64_t events_trained_ = 0;
};

}  // namespace tubeflow
