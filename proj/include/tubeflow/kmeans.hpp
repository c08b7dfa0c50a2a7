#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "tubeflow/window.hpp"

namespace tubeflow {

// 1-d K-means state over one window. Clusters are contiguous runs of the
// value order: segment i covers value ranks [cuts[i-1], cuts[i]), cuts are
// nondecreasing, and centers stay ascending throughout (1-d Lloyd updates
// cannot make centers cross). `moved` flags the centers changed by the most
// recent centroid recompute; the incremental update uses it to decide which
// assignment boundaries must be re-examined, and it is empty-of-meaning for
// hand-built clusterings (treated as all-moved).
struct Clustering {
  std::vector<double> centers;
  std::vector<std::size_t> cuts;  // size centers.size() - 1
  double wcss = 0.0;
  std::vector<std::uint8_t> moved;

  std::size_t k_effective() const { return centers.size(); }

  friend bool operator==(const Clustering&, const Clustering&) = default;
};

// One window slide: at least one of the fields is set.
struct WindowDelta {
  std::optional<double> inserted;
  std::optional<double> evicted;
};

struct LloydStats {
  int iterations = 0;
  std::size_t boundaries_recomputed = 0;
  std::size_t events_reassigned = 0;
};

enum class LloydMode {
  full,         // re-derive every boundary each iteration
  incremental,  // re-derive only boundaries adjacent to a moved center
};

// Centers seeded from the first min(k, #distinct) distinct values in arrival
// order, sorted ascending; boundaries assigned by nearest center (ties to
// the lower index). StateError on an empty window.
Clustering init_clusters(const EventWindow& w, std::size_t k);

// Lloyd iteration core: repeat (assign by midpoint rank, recompute segment
// means) until the assignment and the centers both stop changing, or
// max_iters elapse. Empty segments keep their previous center. Both modes
// compute bit-identical results; incremental mode only skips boundary rank
// queries that provably cannot change.
Clustering lloyd_run(const EventWindow& w, const Clustering& start, int max_iters, LloydMode mode,
                     LloydStats* stats = nullptr);

Clustering lloyd_full(const EventWindow& w, const Clustering& start, int max_iters);

// Incremental update after one window slide: adjusts prev's boundaries for
// the delta by exact rank arithmetic, then resumes Lloyd touching only the
// boundary regions whose adjacent centers moved. Result is identical to
// lloyd_full(w, apply_delta(prev, delta), max_iters).
Clustering lloyd_incremental(const EventWindow& w, const Clustering& prev, const WindowDelta& delta,
                             int max_iters, LloydStats* stats = nullptr);

// prev's boundaries corrected for one insert and/or evict under prev's
// centers: new rank_le(m) = old rank_le(m) + [ins <= m] - [ev <= m].
Clustering apply_delta(const Clustering& prev, const WindowDelta& delta);

// Structural warm-up step: adds a center at v (which must not equal an
// existing center), re-deriving only the two adjacent boundaries. Used while
// a model still has fewer than K clusters.
Clustering insert_center(const EventWindow& w, const Clustering& prev, double v);

// Within-cluster sum of squares via segment aggregates.
double wcss(const EventWindow& w, const Clustering& c);

// Segment index owning value v under c's centers (midpoint rule, ties to
// the lower index). Equal values always map to the same segment.
std::size_t state_of_value(const Clustering& c, double v);

// Exact 1-d clustering: dynamic program over contiguous partitions of the
// sorted input, O(n^2 k). Reference implementation used by the test suites.
Clustering optimal_1d(const std::vector<double>& sorted_values, std::size_t k);

}  // namespace tubeflow
