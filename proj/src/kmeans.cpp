#include "tubeflow/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tubeflow/error.hpp"

namespace tubeflow {

namespace {

void check_state(const EventWindow& w, const Clustering& c) {
  if (w.empty()) throw StateError("kmeans: empty window");
  if (c.centers.empty()) throw StateError("kmeans: clustering has no centers");
  if (c.cuts.size() + 1 != c.centers.size()) {
    throw StateError("kmeans: cuts/centers size mismatch");
  }
}

}  // namespace

Clustering init_clusters(const EventWindow& w, std::size_t k) {
  if (k < 1) throw ConfigError("init_clusters: k must be >= 1");
  if (w.empty()) throw StateError("init_clusters: empty window");

  std::vector<double> seeds;
  for (const auto& e : w.entries()) {
    bool seen = false;
    for (double s : seeds) {
      if (s == e.value) {
        seen = true;
        break;
      }
    }
    if (!seen) {
      seeds.push_back(e.value);
      if (seeds.size() == k) break;
    }
  }
  std::sort(seeds.begin(), seeds.end());

  Clustering c;
  c.centers = std::move(seeds);
  c.cuts.resize(c.centers.size() - 1);
  for (std::size_t i = 0; i + 1 < c.centers.size(); ++i) {
    std::size_t cut = w.rank_le(std::midpoint(c.centers[i], c.centers[i + 1]));
    if (i > 0 && cut < c.cuts[i - 1]) cut = c.cuts[i - 1];
    c.cuts[i] = cut;
  }
  c.moved.assign(c.centers.size(), 1);
  c.wcss = wcss(w, c);
  return c;
}

Clustering lloyd_run(const EventWindow& w, const Clustering& start, int max_iters, LloydMode mode,
                     LloydStats* stats) {
  if (max_iters < 1) throw ConfigError("lloyd: max_iters must be >= 1");
  check_state(w, start);

  const std::size_t k = start.centers.size();
  const std::size_t n = w.size();

  std::vector<double> centers = start.centers;
  std::vector<std::size_t> prev_cuts = start.cuts;
  std::vector<std::uint8_t> moved = start.moved;
  if (moved.size() != k) moved.assign(k, 1);

  std::vector<std::size_t> cuts(k - 1);
  std::vector<double> next_centers(k);
  std::vector<std::uint8_t> next_moved(k);
  int iterations = 0;

  for (int it = 0; it < max_iters; ++it) {
    ++iterations;

    // Assignment. A boundary's midpoint is unchanged unless one of its two
    // centers moved in the last recompute, and the window is fixed within
    // this call, so the previous cut is provably still the rank answer.
    for (std::size_t i = 0; i + 1 < k; ++i) {
      bool must = mode == LloydMode::full || moved[i] || moved[i + 1];
      std::size_t cut = must ? w.rank_le(std::midpoint(centers[i], centers[i + 1])) : prev_cuts[i];
      if (i > 0 && cut < cuts[i - 1]) cut = cuts[i - 1];  // guard; no-op for sane states
      if (stats) {
        if (must) stats->boundaries_recomputed += 1;
        std::size_t old = prev_cuts[i];
        stats->events_reassigned += cut > old ? cut - old : old - cut;
      }
      cuts[i] = cut;
    }

    // Centroid recompute over the new segments; empty segments keep their
    // previous center so the slot survives until values return.
    bool any_moved = false;
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t lo = i == 0 ? 0 : cuts[i - 1];
      std::size_t hi = i + 1 < k ? cuts[i] : n;
      if (hi > lo) {
        RankAggregate agg = w.segment_aggregate(lo, hi);
        next_centers[i] = agg.sum / static_cast<double>(agg.count);
      } else {
        next_centers[i] = centers[i];
      }
      next_moved[i] = next_centers[i] != centers[i];
      any_moved |= next_moved[i] != 0;
    }

    bool converged = cuts == prev_cuts && !any_moved;
    centers.swap(next_centers);
    moved.swap(next_moved);
    prev_cuts = cuts;
    if (converged) break;
  }

  Clustering out;
  out.centers = std::move(centers);
  out.cuts = std::move(prev_cuts);
  out.moved = std::move(moved);
  out.wcss = wcss(w, out);
  if (stats) stats->iterations = iterations;
  return out;
}

Clustering lloyd_full(const EventWindow& w, const Clustering& start, int max_iters) {
  return lloyd_run(w, start, max_iters, LloydMode::full);
}

Clustering lloyd_incremental(const EventWindow& w, const Clustering& prev, const WindowDelta& delta,
                             int max_iters, LloydStats* stats) {
  if (delta.inserted && w.rank_le(*delta.inserted) == w.rank_lt(*delta.inserted)) {
    throw StateError("lloyd_incremental: inserted value not present in window");
  }
  return lloyd_run(w, apply_delta(prev, delta), max_iters, LloydMode::incremental, stats);
}

Clustering apply_delta(const Clustering& prev, const WindowDelta& delta) {
  if (!delta.inserted && !delta.evicted) throw StateError("apply_delta: empty delta");
  if (prev.centers.empty()) throw StateError("apply_delta: clustering has no centers");

  const bool flags_valid = prev.moved.size() == prev.centers.size();
  Clustering out = prev;
  for (std::size_t i = 0; i + 1 < prev.centers.size(); ++i) {
    // After a capped-out Lloyd call, boundaries next to a moved center hold
    // ranks for the pre-move midpoints; they get recomputed on the next
    // iteration regardless, so underflow there is tolerated, not an error.
    bool stale = !flags_valid || prev.moved[i] || prev.moved[i + 1];
    double m = std::midpoint(prev.centers[i], prev.centers[i + 1]);
    std::size_t cut = prev.cuts[i];
    if (delta.inserted && *delta.inserted <= m) cut += 1;
    if (delta.evicted && *delta.evicted <= m) {
      if (cut > 0) {
        cut -= 1;
      } else if (!stale) {
        throw StateError("apply_delta: evicted value inconsistent with assignment");
      }
    }
    out.cuts[i] = cut;
  }
  return out;
}

Clustering insert_center(const EventWindow& w, const Clustering& prev, double v) {
  if (!std::isfinite(v)) throw StateError("insert_center: non-finite value");
  const auto& c = prev.centers;
  const std::size_t p =
      static_cast<std::size_t>(std::lower_bound(c.begin(), c.end(), v) - c.begin());
  if (p < c.size() && c[p] == v) throw StateError("insert_center: value already a center");

  Clustering out;
  out.centers = c;
  out.centers.insert(out.centers.begin() + static_cast<std::ptrdiff_t>(p), v);
  out.moved = prev.moved;
  if (out.moved.size() != c.size()) out.moved.assign(c.size(), 1);
  out.moved.insert(out.moved.begin() + static_cast<std::ptrdiff_t>(p), 1);

  // Only the two boundaries touching the new center need fresh ranks; the
  // rest separate the same center pairs as before.
  const std::size_t k_new = out.centers.size();
  out.cuts.resize(k_new > 0 ? k_new - 1 : 0);
  for (std::size_t i = 0; i + 1 < k_new; ++i) {
    if (i + 1 == p || i == p) {
      out.cuts[i] = w.rank_le(std::midpoint(out.centers[i], out.centers[i + 1]));
    } else if (i < p) {
      out.cuts[i] = prev.cuts[i];
    } else {
      out.cuts[i] = prev.cuts[i - 1];
    }
  }
  for (std::size_t i = 1; i < out.cuts.size(); ++i) {
    if (out.cuts[i] < out.cuts[i - 1]) out.cuts[i] = out.cuts[i - 1];
  }
  out.wcss = prev.wcss;  // stale by design; the caller runs Lloyd next
  return out;
}

double wcss(const EventWindow& w, const Clustering& c) {
  check_state(w, c);
  const std::size_t k = c.centers.size();
  const std::size_t n = w.size();
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t lo = i == 0 ? 0 : c.cuts[i - 1];
    std::size_t hi = i + 1 < k ? c.cuts[i] : n;
    if (hi <= lo) continue;
    RankAggregate agg = w.segment_aggregate(lo, hi);
    double ci = c.centers[i];
    double seg = agg.sum_sq - 2.0 * ci * agg.sum + static_cast<double>(agg.count) * ci * ci;
    total += std::max(0.0, seg);
  }
  return total;
}

std::size_t state_of_value(const Clustering& c, double v) {
  if (c.centers.empty()) throw StateError("state_of_value: no centers");
  // Smallest i with v <= midpoint(centers[i], centers[i+1]); midpoints are
  // nondecreasing, ties land on the lower index.
  std::size_t a = 0;
  std::size_t b = c.centers.size() - 1;
  while (a < b) {
    std::size_t mid = (a + b) / 2;
    if (v <= std::midpoint(c.centers[mid], c.centers[mid + 1])) {
      b = mid;
    } else {
      a = mid + 1;
    }
  }
  return a;
}

Clustering optimal_1d(const std::vector<double>& sorted_values, std::size_t k) {
  if (sorted_values.empty()) throw StateError("optimal_1d: empty input");
  if (k < 1) throw ConfigError("optimal_1d: k must be >= 1");
  if (!std::is_sorted(sorted_values.begin(), sorted_values.end())) {
    throw StateError("optimal_1d: values must be ascending");
  }

  const std::size_t n = sorted_values.size();
  const std::size_t p = std::min(k, n);

  std::vector<double> ps(n + 1, 0.0);
  std::vector<double> ps2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    ps[i + 1] = ps[i] + sorted_values[i];
    ps2[i + 1] = ps2[i] + sorted_values[i] * sorted_values[i];
  }
  auto cost = [&](std::size_t a, std::size_t b) {  // [a, b), b > a
    double s = ps[b] - ps[a];
    double s2 = ps2[b] - ps2[a];
    return std::max(0.0, s2 - s * s / static_cast<double>(b - a));
  };

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> dp(p + 1, std::vector<double>(n + 1, inf));
  std::vector<std::vector<std::size_t>> split(p + 1, std::vector<std::size_t>(n + 1, 0));
  dp[0][0] = 0.0;
  for (std::size_t j = 1; j <= p; ++j) {
    for (std::size_t i = j; i + (p - j) <= n; ++i) {
      double best = inf;
      std::size_t best_split = 0;
      for (std::size_t s = j - 1; s < i; ++s) {
        if (dp[j - 1][s] == inf) continue;
        double candidate = dp[j - 1][s] + cost(s, i);
        if (candidate < best) {
          best = candidate;
          best_split = s;
        }
      }
      dp[j][i] = best;
      split[j][i] = best_split;
    }
  }

  Clustering out;
  std::vector<std::size_t> cuts;
  std::size_t i = n;
  for (std::size_t j = p; j >= 1; --j) {
    std::size_t s = split[j][i];
    if (j > 1) cuts.push_back(s);
    i = s;
  }
  std::reverse(cuts.begin(), cuts.end());
  out.cuts = std::move(cuts);
  out.centers.resize(p);
  for (std::size_t seg = 0; seg < p; ++seg) {
    std::size_t lo = seg == 0 ? 0 : out.cuts[seg - 1];
    std::size_t hi = seg + 1 < p ? out.cuts[seg] : n;
    out.centers[seg] = (ps[hi] - ps[lo]) / static_cast<double>(hi - lo);
  }
  out.moved.assign(p, 0);
  out.wcss = dp[p][n];
  return out;
}

}  // namespace tubeflow
