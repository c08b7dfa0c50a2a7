#include "tubeflow/detector.hpp"

#include <algorithm>
#include <string>

#include "tubeflow/error.hpp"

namespace tubeflow {

void validate_params(const ModelParams& p) {
  if (p.window < 1) throw ConfigError("params: window must be >= 1");
  if (p.clusters < 1) throw ConfigError("params: clusters must be >= 1");
  if (p.max_iters < 1) throw ConfigError("params: max-iters must be >= 1");
  if (p.seq_len < 1) throw ConfigError("params: seq-len must be >= 1");
  if (!(p.theta >= 0.0 && p.theta <= 1.0)) throw ConfigError("params: theta must be in [0, 1]");
  if (p.rebuild_every < 1) throw ConfigError("params: rebuild-every must be >= 1");
  if (p.window_mode == WindowMode::count &&
      p.seq_len + 1 > static_cast<std::size_t>(p.window)) {
    throw ConfigError("params: seq-len must be at most window - 1");
  }
}

SequenceProbState::SequenceProbState(std::size_t seq_len, std::size_t rebuild_every)
    : seq_len_(seq_len), rebuild_every_(rebuild_every) {
  if (seq_len < 1) throw ConfigError("sequence probability: length must be >= 1");
  if (rebuild_every < 1) throw ConfigError("sequence probability: rebuild-every must be >= 1");
}

void SequenceProbState::push(double factor) {
  if (!(factor >= 0.0 && factor <= 1.0)) {
    throw StateError("sequence probability: factor outside [0, 1]");
  }
  if (factors_.size() == seq_len_) {
    double oldest = factors_.front();
    factors_.pop_front();
    if (oldest == 0.0) {
      --zero_count_;
    } else {
      nonzero_product_ /= oldest;
      ++ops_;
    }
  }
  factors_.push_back(factor);
  if (factor == 0.0) {
    ++zero_count_;
  } else {
    nonzero_product_ *= factor;
    ++ops_;
  }
  if (++pushes_since_rebuild_ >= rebuild_every_) rebuild();
}

void SequenceProbState::rebuild() {
  pushes_since_rebuild_ = 0;
  nonzero_product_ = 1.0;
  zero_count_ = 0;
  for (double f : factors_) {
    if (f == 0.0) {
      ++zero_count_;
    } else {
      nonzero_product_ *= f;
    }
  }
}

std::optional<double> SequenceProbState::probability() const {
  if (factors_.size() < seq_len_) return std::nullopt;
  return zero_count_ > 0 ? 0.0 : nonzero_product_;
}

std::optional<double> seq_prob_exact(const TransitionMatrix& m,
                                     std::span<const std::uint32_t> states, std::uint64_t* ops) {
  if (states.size() < 2) return std::nullopt;
  double p = 1.0;
  for (std::size_t i = 0; i + 1 < states.size(); ++i) {
    p *= m.probability(states[i], states[i + 1]);
    if (ops) ++*ops;
  }
  return p;
}

AnomalyModel::AnomalyModel(std::int64_t sensor_id, const ModelParams& params, UpdatePath path)
    : sensor_id_(sensor_id),
      params_(params),
      path_(path),
      window_(params.window, params.window_mode),
      matrix_(params.clusters),
      prob_(params.seq_len, params.rebuild_every) {
  validate_params(params);
}

void AnomalyModel::train(const SensorEvent& e) {
  if (e.sensor_id != sensor_id_) {
    throw StateError("model for sensor " + std::to_string(sensor_id_) +
                     " received event for sensor " + std::to_string(e.sensor_id));
  }

  const std::size_t old_size = window_.size();
  const std::vector<std::uint32_t> old_states = std::move(states_);

  const std::vector<WindowEntry> evicted = window_.push(e.timestamp, e.value);
  const std::size_t m = evicted.size();
  const double v = e.value;

  // Clustering update. The boundary ranks of the previous result transfer to
  // the slid window by exact +/-1 arithmetic, then Lloyd resumes from them.
  std::optional<std::size_t> seeded_at;
  const LloydMode mode =
      path_ == UpdatePath::incremental ? LloydMode::incremental : LloydMode::full;
  last_stats_ = LloydStats{};
  if (old_size == 0) {
    clustering_ = init_clusters(window_, 1);
    seeded_at = 0;
  } else {
    Clustering adjusted = apply_delta(
        clustering_, WindowDelta{v, m > 0 ? std::optional<double>(evicted[0].value) : std::nullopt});
    for (std::size_t j = 1; j < m; ++j) {
      adjusted = apply_delta(adjusted, WindowDelta{std::nullopt, evicted[j].value});
    }

    bool is_center = std::find(adjusted.centers.begin(), adjusted.centers.end(), v) !=
                     adjusted.centers.end();
    if (adjusted.k_effective() < params_.clusters && !is_center) {
      seeded_at = static_cast<std::size_t>(
          std::lower_bound(adjusted.centers.begin(), adjusted.centers.end(), v) -
          adjusted.centers.begin());
      adjusted = insert_center(window_, adjusted, v);
    }
    clustering_ = lloyd_run(window_, adjusted, params_.max_iters, mode, &last_stats_);
  }
  cumulative_stats_.iterations += last_stats_.iterations;
  cumulative_stats_.boundaries_recomputed += last_stats_.boundaries_recomputed;
  cumulative_stats_.events_reassigned += last_stats_.events_reassigned;

  const std::size_t n = window_.size();
  states_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    states_[i] = static_cast<std::uint32_t>(state_of_value(clustering_, window_.at(i).value));
  }

  if (path_ == UpdatePath::rebuild) {
    matrix_ = TransitionMatrix::rebuild_counts(states_, params_.clusters);
  } else {
    // Seeding renumbers every old label >= seeded_at up by one; those rows
    // and columns are stale in place and must be flagged for rescan.
    const auto renamed = [&](std::uint32_t s) {
      return seeded_at && s >= *seeded_at ? s + 1 : s;
    };
    std::vector<std::uint8_t> changed(params_.clusters, 0);
    if (seeded_at) {
      for (std::size_t s = *seeded_at; s < clustering_.k_effective(); ++s) changed[s] = 1;
    }
    for (std::size_t j = 0; j < m; ++j) changed[renamed(old_states[j])] = 1;
    for (std::size_t i = 0; i + 1 < n; ++i) {  // retained block: old i+m vs new i
      if (i + m < old_states.size()) {
        std::uint32_t before = renamed(old_states[i + m]);
        if (before != states_[i]) {
          changed[before] = 1;
          changed[states_[i]] = 1;
        }
      }
    }
    if (n > 0) changed[states_[n - 1]] = 1;

    std::vector<StateEdge> evicted_edges;
    for (std::size_t j = 0; j < m; ++j) {
      if (j + 1 < old_states.size()) {
        evicted_edges.emplace_back(renamed(old_states[j]), renamed(old_states[j + 1]));
      }
    }
    std::optional<StateEdge> appended_edge;
    if (n >= 2) appended_edge = StateEdge{states_[n - 2], states_[n - 1]};

    matrix_.refresh(states_, changed, evicted_edges, appended_edge);
  }

  if (n >= 2) prob_.push(matrix_.probability(states_[n - 2], states_[n - 1]));
  ++events_trained_;
}

DetectionEvent AnomalyModel::predict(const SensorEvent& e) const {
  std::optional<double> p;
  if (params_.prob_mode == ProbMode::incremental) {
    p = prob_.probability();
  } else if (states_.size() >= params_.seq_len + 1) {
    std::span<const std::uint32_t> tail(states_.data() + states_.size() - (params_.seq_len + 1),
                                        params_.seq_len + 1);
    p = seq_prob_exact(matrix_, tail, &exact_ops_);
  }
  DetectionEvent d;
  d.timestamp = e.timestamp;
  d.sensor_id = e.sensor_id;
  d.probability = p;
  d.anomaly = p.has_value() && *p < params_.theta;
  return d;
}

DetectionEvent AnomalyModel::process(const SensorEvent& e, ExecutionOrder order) {
  if (order == ExecutionOrder::train_first) {
    train(e);
    return predict(e);
  }
  DetectionEvent d = predict(e);
  train(e);
  return d;
}

}  // namespace tubeflow
