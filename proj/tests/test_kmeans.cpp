#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "tubeflow/error.hpp"
#include "tubeflow/kmeans.hpp"
#include "tubeflow/window.hpp"

using namespace tubeflow;

namespace {

EventWindow window_of(const std::vector<double>& values, std::int64_t capacity = 0) {
  EventWindow w(capacity > 0 ? capacity : static_cast<std::int64_t>(values.size()));
  std::int64_t ts = 0;
  for (double v : values) w.push(ts++, v);
  return w;
}

// Reference assignment: nearest center, ties to the lower index.
std::size_t nearest_center(const std::vector<double>& centers, double v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < centers.size(); ++i) {
    if (std::abs(v - centers[i]) < std::abs(v - centers[best])) best = i;
  }
  return best;
}

// Exhaustive best partition of sorted values into at most k contiguous runs,
// accumulating cost left to right exactly like the dynamic program does.
double best_partition_cost(const std::vector<double>& sorted, std::size_t k) {
  const std::size_t n = sorted.size();
  std::vector<double> ps(n + 1, 0.0);
  std::vector<double> ps2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    ps[i + 1] = ps[i] + sorted[i];
    ps2[i + 1] = ps2[i] + sorted[i] * sorted[i];
  }
  auto cost = [&](std::size_t a, std::size_t b) {
    double s = ps[b] - ps[a];
    double s2 = ps2[b] - ps2[a];
    return std::max(0.0, s2 - s * s / static_cast<double>(b - a));
  };

  const std::size_t p = std::min(k, n);
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> cuts(p - 1, 0);
  // Enumerate ascending interior cut positions 1..n-1, p-1 of them.
  auto rec = [&](auto&& self, std::size_t idx, std::size_t from) -> void {
    if (idx == cuts.size()) {
      double total = 0.0;
      std::size_t lo = 0;
      for (std::size_t c : cuts) {
        total = total + cost(lo, c);
        lo = c;
      }
      total = total + cost(lo, n);
      best = std::min(best, total);
      return;
    }
    for (std::size_t c = from; c + (cuts.size() - idx) <= n; ++c) {
      cuts[idx] = c;
      self(self, idx + 1, c + 1);
    }
  };
  rec(rec, 0, 1);
  return best;
}

}  // namespace

TEST_CASE("init_clusters seeds from first distinct values, sorted") {
  auto w = window_of({5, 5, 2, 8});
  Clustering c = init_clusters(w, 3);
  REQUIRE(c.centers == std::vector<double>{2, 5, 8});
  // Midpoints 3.5 and 6.5 split ranks as [2 | 5 5 | 8].
  REQUIRE(c.cuts == std::vector<std::size_t>{1, 3});
  CHECK(c.moved == std::vector<std::uint8_t>{1, 1, 1});

  auto single = window_of({4, 4, 4});
  CHECK(init_clusters(single, 5).k_effective() == 1);

  CHECK_THROWS_AS(init_clusters(w, 0), ConfigError);
}

TEST_CASE("full Lloyd converges on a two-cluster split") {
  auto w = window_of({1, 2, 10, 11});
  LloydStats stats;
  Clustering c = lloyd_run(w, init_clusters(w, 2), 50, LloydMode::full, &stats);
  CHECK(c.centers == std::vector<double>{1.5, 10.5});
  CHECK(c.cuts == std::vector<std::size_t>{2});
  CHECK(c.wcss == doctest::Approx(1.0));
  CHECK(c.moved == std::vector<std::uint8_t>{0, 0});  // settled
  CHECK(stats.iterations >= 2);
}

TEST_CASE("midpoint ties assign to the lower cluster") {
  Clustering c;
  c.centers = {1.0, 3.0};
  c.cuts = {0};
  CHECK(state_of_value(c, 2.0) == 0);  // exactly between
  CHECK(state_of_value(c, 2.0000001) == 1);
  CHECK(state_of_value(c, -50.0) == 0);
  CHECK(state_of_value(c, 50.0) == 1);
}

TEST_CASE("state_of_value matches nearest-center assignment") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> centers;
    const int k = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < k; ++i) centers.push_back(dist(rng));
    std::sort(centers.begin(), centers.end());
    centers.erase(std::unique(centers.begin(), centers.end()), centers.end());
    Clustering c;
    c.centers = centers;
    c.cuts.assign(centers.size() - 1, 0);
    for (int probe = 0; probe < 50; ++probe) {
      const double v = dist(rng);
      REQUIRE(state_of_value(c, v) == nearest_center(centers, v));
    }
  }
}

TEST_CASE("inserting a value equal to a center converges in one iteration") {
  auto w = window_of({1, 1, 3, 3}, 100);
  Clustering prev = lloyd_run(w, init_clusters(w, 2), 50, LloydMode::full);
  REQUIRE(prev.centers == std::vector<double>{1, 3});

  w.push(4, 3.0);
  LloydStats stats;
  Clustering c = lloyd_incremental(w, prev, WindowDelta{3.0, std::nullopt}, 50, &stats);
  CHECK(c.centers == std::vector<double>{1, 3});
  CHECK(stats.iterations == 1);
  CHECK(stats.boundaries_recomputed == 0);  // nothing moved, nothing re-derived
}

TEST_CASE("incremental insert shifts only the affected cluster") {
  auto w = window_of({1, 2, 10, 11}, 100);
  Clustering prev = lloyd_run(w, init_clusters(w, 2), 50, LloydMode::full);
  REQUIRE(prev.centers == std::vector<double>{1.5, 10.5});

  w.push(4, 3.0);
  LloydStats stats;
  Clustering c = lloyd_incremental(w, prev, WindowDelta{3.0, std::nullopt}, 50, &stats);
  CHECK(c.centers == std::vector<double>{2.0, 10.5});
  CHECK(c.centers[1] == 10.5);  // untouched cluster is bit-identical
  CHECK(c.cuts == std::vector<std::size_t>{3});
  CHECK(stats.boundaries_recomputed == 1);  // re-derived once, after the left center moved
}

TEST_CASE("lloyd_incremental insists the inserted value is in the window") {
  auto w = window_of({1, 2, 3});
  Clustering c = init_clusters(w, 2);
  CHECK_THROWS_AS(lloyd_incremental(w, c, WindowDelta{99.0, std::nullopt}, 10), StateError);
}

TEST_CASE("apply_delta adjusts boundary ranks exactly") {
  auto w = window_of({1, 2, 10, 11});
  Clustering c = lloyd_run(w, init_clusters(w, 2), 50, LloydMode::full);
  // Insert below the midpoint, evict above it.
  Clustering adj = apply_delta(c, WindowDelta{3.0, 11.0});
  CHECK(adj.cuts == std::vector<std::size_t>{3});
  CHECK(adj.centers == c.centers);

  // Underflow on a settled boundary is a real inconsistency.
  Clustering zero;
  zero.centers = {1.0, 5.0};
  zero.cuts = {0};
  zero.moved = {0, 0};
  CHECK_THROWS_AS(apply_delta(zero, WindowDelta{std::nullopt, 0.5}), StateError);
  // On a boundary next to a moved center it is tolerated stale state.
  zero.moved = {1, 0};
  CHECK_NOTHROW(apply_delta(zero, WindowDelta{std::nullopt, 0.5}));

  CHECK_THROWS_AS(apply_delta(zero, WindowDelta{}), StateError);
}

TEST_CASE("insert_center re-derives only the adjacent boundaries") {
  auto w = window_of({1, 2, 10, 11}, 100);
  Clustering prev = lloyd_run(w, init_clusters(w, 2), 50, LloydMode::full);

  Clustering grown = insert_center(w, prev, 5.0);
  REQUIRE(grown.centers == std::vector<double>{1.5, 5.0, 10.5});
  // Midpoints 3.25 and 7.75: ranks 2 and 2, so the new middle segment is empty.
  CHECK(grown.cuts == std::vector<std::size_t>{2, 2});
  CHECK(grown.moved == std::vector<std::uint8_t>{0, 1, 0});

  CHECK_THROWS_AS(insert_center(w, prev, 1.5), StateError);  // already a center
}

TEST_CASE("incremental and full Lloyd agree bit-for-bit under churn") {
  std::mt19937_64 rng(2024);

  for (int config = 0; config < 6; ++config) {
    const std::size_t k = 1 + rng() % 6;
    const std::int64_t cap = 8 + static_cast<std::int64_t>(rng() % 40);
    const int max_iters = config % 2 == 0 ? 10 : 1;  // the cap path must agree too
    std::uniform_real_distribution<double> dist(0.0, 30.0);

    EventWindow w(cap);
    std::int64_t ts = 0;
    for (std::int64_t i = 0; i < cap; ++i) w.push(ts++, dist(rng));
    Clustering prev = lloyd_run(w, init_clusters(w, k), 50, LloydMode::full);

    for (int step = 0; step < 400; ++step) {
      const double v = step % 5 == 0 ? std::floor(dist(rng)) : dist(rng);
      auto evicted = w.push(ts++, v);
      REQUIRE(evicted.size() == 1);
      WindowDelta delta{v, evicted[0].value};

      LloydStats stats;
      Clustering inc = lloyd_incremental(w, prev, delta, max_iters, &stats);
      Clustering full = lloyd_run(w, apply_delta(prev, delta), max_iters, LloydMode::full);

      REQUIRE(inc.cuts == full.cuts);
      REQUIRE(inc.centers == full.centers);  // bitwise
      REQUIRE(inc.moved == full.moved);
      REQUIRE(inc.wcss == full.wcss);
      prev = inc;
    }
  }
}

TEST_CASE("optimal_1d solves small instances exactly") {
  Clustering c = optimal_1d({1, 2, 4, 5}, 2);
  CHECK(c.cuts == std::vector<std::size_t>{2});
  CHECK(c.centers == std::vector<double>{1.5, 4.5});
  CHECK(c.wcss == doctest::Approx(1.0));

  CHECK(optimal_1d({3, 7, 9}, 3).wcss == 0.0);
  CHECK(optimal_1d({3, 7, 9}, 8).wcss == 0.0);  // k beyond n collapses to n clusters
  CHECK(optimal_1d({5}, 1).centers == std::vector<double>{5});

  CHECK_THROWS_AS(optimal_1d({}, 2), StateError);
  CHECK_THROWS_AS(optimal_1d({3, 1}, 2), StateError);  // must be sorted
}

TEST_CASE("optimal_1d matches exhaustive enumeration") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> dist(0.0, 10.0);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    const std::size_t k = 1 + rng() % 4;
    std::vector<double> values;
    for (std::size_t i = 0; i < n; ++i) values.push_back(dist(rng));
    std::sort(values.begin(), values.end());
    REQUIRE(optimal_1d(values, k).wcss == best_partition_cost(values, k));
  }
}

TEST_CASE("Lloyd never beats the exact optimum") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> dist(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 40;
    const std::size_t k = 1 + rng() % 6;
    std::vector<double> values;
    for (std::size_t i = 0; i < n; ++i) values.push_back(dist(rng));

    auto w = window_of(values);
    Clustering lloyd = lloyd_run(w, init_clusters(w, k), 100, LloydMode::full);
    std::sort(values.begin(), values.end());
    REQUIRE(lloyd.wcss >= optimal_1d(values, k).wcss - 1e-9);
  }
}

TEST_CASE("wcss scores distances to the given centers") {
  auto w = window_of({0, 0, 4, 4});
  Clustering c;
  c.centers = {0.0, 4.0};
  c.cuts = {2};
  CHECK(wcss(w, c) == 0.0);
  c.cuts = {1};  // one 0 lands in the far cluster: (0 - 4)^2
  CHECK(wcss(w, c) == 16.0);
}
