#include "tubeflow/markov.hpp"

#include <numeric>

#include "tubeflow/error.hpp"
#include "tubeflow/events.hpp"

namespace tubeflow {

TransitionMatrix::TransitionMatrix(std::size_t k) : k_(k) {
  if (k == 0) throw ConfigError("transition matrix: state count must be at least 1");
  counts_.assign(k * k, 0);
  row_totals_.assign(k, 0);
}

std::uint64_t TransitionMatrix::count(std::size_t from, std::size_t to) const {
  if (from >= k_ || to >= k_) throw BoundsError("transition matrix: state index out of range");
  return counts_[from * k_ + to];
}

std::uint64_t TransitionMatrix::row_total(std::size_t from) const {
  if (from >= k_) throw BoundsError("transition matrix: state index out of range");
  return row_totals_[from];
}

std::uint64_t TransitionMatrix::total() const {
  return std::accumulate(row_totals_.begin(), row_totals_.end(), std::uint64_t{0});
}

double TransitionMatrix::probability(std::size_t from, std::size_t to) const {
  if (from >= k_ || to >= k_) throw BoundsError("transition matrix: state index out of range");
  const std::uint64_t rt = row_totals_[from];
  if (rt == 0) return 0.0;
  return static_cast<double>(counts_[from * k_ + to]) / static_cast<double>(rt);
}

void TransitionMatrix::clear() {
  std::fill(counts_.begin(), counts_.end(), 0);
  std::fill(row_totals_.begin(), row_totals_.end(), 0);
}

TransitionMatrix TransitionMatrix::rebuild_counts(std::span<const std::uint32_t> states,
                                                  std::size_t k) {
  TransitionMatrix m(k);
  for (std::size_t i = 0; i + 1 < states.size(); ++i) {
    const std::uint32_t from = states[i];
    const std::uint32_t to = states[i + 1];
    if (from >= k || to >= k) throw StateError("transition matrix: state label out of range");
    ++m.counts_[from * k + to];
    ++m.row_totals_[from];
  }
  return m;
}

void TransitionMatrix::refresh(std::span<const std::uint32_t> new_states,
                               const std::vector<std::uint8_t>& changed,
                               std::span<const StateEdge> evicted_edges,
                               std::optional<StateEdge> appended_edge) {
  if (changed.size() != k_) throw StateError("transition matrix: changed flags size mismatch");
  for (std::uint32_t s : new_states)
    if (s >= k_) throw StateError("transition matrix: state label out of range");

  const auto untouched = [&](const StateEdge& e) {
    if (e.first >= k_ || e.second >= k_)
      throw StateError("transition matrix: state label out of range");
    return !changed[e.first] && !changed[e.second];
  };

  // Transitions between two unchanged states are never rescanned, so the
  // window's boundary pairs adjust them directly. Pairs touching a changed
  // state are covered by the zero-and-rescan below.
  for (const StateEdge& e : evicted_edges) {
    if (!untouched(e)) continue;
    std::uint64_t& cell = counts_[e.first * k_ + e.second];
    if (cell == 0) throw StateError("transition matrix: evicted transition was never counted");
    --cell;
  }
  if (appended_edge && untouched(*appended_edge))
    ++counts_[appended_edge->first * k_ + appended_edge->second];

  for (std::size_t s = 0; s < k_; ++s) {
    if (changed[s]) {
      std::fill_n(counts_.begin() + static_cast<std::ptrdiff_t>(s * k_), k_, 0);
      for (std::size_t r = 0; r < k_; ++r) counts_[r * k_ + s] = 0;
    }
  }
  for (std::size_t i = 0; i + 1 < new_states.size(); ++i) {
    const std::uint32_t from = new_states[i];
    const std::uint32_t to = new_states[i + 1];
    if (changed[from] || changed[to]) ++counts_[from * k_ + to];
  }

  for (std::size_t r = 0; r < k_; ++r) {
    const auto row = counts_.begin() + static_cast<std::ptrdiff_t>(r * k_);
    row_totals_[r] = std::accumulate(row, row + static_cast<std::ptrdiff_t>(k_), std::uint64_t{0});
  }
}

std::string TransitionMatrix::to_csv() const {
  std::string out;
  for (std::size_t r = 0; r < k_; ++r) {
    for (std::size_t c = 0; c < k_; ++c) {
      if (c > 0) out += ',';
      out += format_double(probability(r, c));
    }
    out += '\n';
  }
  return out;
}

}  // namespace tubeflow
