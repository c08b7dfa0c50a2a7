#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tubeflow {

using StateEdge = std::pair<std::uint32_t, std::uint32_t>;  // (from, to)

// First-order transition counts over a window's time-ordered state sequence.
// Counts are exact integers; probabilities are derived on demand. A row with
// no observations yields probability 0 for every target (no smoothing).
class TransitionMatrix {
 public:
  explicit TransitionMatrix(std::size_t k);

  std::size_t states() const { return k_; }
  std::uint64_t count(std::size_t from, std::size_t to) const;
  std::uint64_t row_total(std::size_t from) const;
  std::uint64_t total() const;
  double probability(std::size_t from, std::size_t to) const;
  void clear();

  // Tallies every consecutive pair of `states`.
  static TransitionMatrix rebuild_counts(std::span<const std::uint32_t> states, std::size_t k);

  // Incremental update after one window slide. Precondition: relative to the
  // sequence this matrix currently reflects, every state whose membership
  // changed is flagged in `changed`, and the window's edge transitions are
  // passed explicitly (they can involve unchanged states). Rows and columns
  // of changed states are recomputed from `new_states`; edge transitions
  // whose endpoints are both unchanged are adjusted by +/-1. The result
  // equals rebuild_counts(new_states, k).
  void refresh(std::span<const std::uint32_t> new_states, const std::vector<std::uint8_t>& changed,
               std::span<const StateEdge> evicted_edges, std::optional<StateEdge> appended_edge);

  // Row-major probability rows, one CSV line per source state.
  std::string to_csv() const;

  friend bool operator==(const TransitionMatrix&, const TransitionMatrix&) = default;

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;      // k x k, row-major
  std::vector<std::uint64_t> row_totals_;  // derived, kept in step with counts_
};

}  // namespace tubeflow
