#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <vector>

#include "doctest.h"
#include "tubeflow/error.hpp"
#include "tubeflow/markov.hpp"

using namespace tubeflow;

namespace {

std::vector<std::uint32_t> to_vec(const std::deque<std::uint32_t>& d) {
  return {d.begin(), d.end()};
}

}  // namespace

TEST_CASE("rebuild_counts tallies consecutive transitions") {
  const std::vector<std::uint32_t> states{1, 2, 1, 1, 0};
  TransitionMatrix m = TransitionMatrix::rebuild_counts(states, 3);

  CHECK(m.count(1, 2) == 1);
  CHECK(m.count(2, 1) == 1);
  CHECK(m.count(1, 1) == 1);
  CHECK(m.count(1, 0) == 1);
  CHECK(m.count(0, 0) == 0);
  CHECK(m.row_total(0) == 0);
  CHECK(m.row_total(1) == 3);
  CHECK(m.row_total(2) == 1);
  CHECK(m.total() == 4);

  CHECK(m.probability(1, 0) == 1.0 / 3.0);
  CHECK(m.probability(1, 2) == 1.0 / 3.0);
  CHECK(m.probability(0, 1) == 0.0);  // empty row, no smoothing
  CHECK(m.probability(2, 1) == 1.0);

  CHECK_THROWS_AS(m.count(3, 0), BoundsError);
  CHECK_THROWS_AS(m.probability(0, 3), BoundsError);
  CHECK_THROWS_AS(m.row_total(9), BoundsError);
  CHECK_THROWS_AS(TransitionMatrix(0), ConfigError);
  CHECK_THROWS_AS(TransitionMatrix::rebuild_counts(std::vector<std::uint32_t>{0, 5}, 3),
                  StateError);
}

TEST_CASE("clear zeroes every cell") {
  TransitionMatrix m = TransitionMatrix::rebuild_counts(std::vector<std::uint32_t>{0, 1, 0}, 2);
  REQUIRE(m.total() == 2);
  m.clear();
  CHECK(m.total() == 0);
  CHECK(m.probability(0, 1) == 0.0);
}

TEST_CASE("refresh applies boundary edges when nothing changed") {
  // Window slides [0,1,2,0] -> [1,2,0,1]: lose (0,1), gain (0,1).
  TransitionMatrix m = TransitionMatrix::rebuild_counts(std::vector<std::uint32_t>{0, 1, 2, 0}, 3);
  const std::vector<std::uint32_t> next{1, 2, 0, 1};
  m.refresh(next, std::vector<std::uint8_t>(3, 0), std::vector<StateEdge>{{0, 1}},
            StateEdge{0, 1});
  CHECK(m == TransitionMatrix::rebuild_counts(next, 3));
}

TEST_CASE("refresh with everything flagged is a rebuild") {
  TransitionMatrix m = TransitionMatrix::rebuild_counts(std::vector<std::uint32_t>{2, 2, 1}, 4);
  const std::vector<std::uint32_t> next{3, 0, 0, 1};
  // Edge lists are ignored for flagged states, so stale ones are harmless here.
  m.refresh(next, std::vector<std::uint8_t>(4, 1), std::vector<StateEdge>{{2, 2}},
            StateEdge{0, 1});
  CHECK(m == TransitionMatrix::rebuild_counts(next, 4));
}

TEST_CASE("refresh matches rebuild under random sliding and relabeling") {
  std::mt19937_64 rng(99);
  const std::size_t k = 4;
  auto label = [&] { return static_cast<std::uint32_t>(rng() % k); };

  std::deque<std::uint32_t> window;
  for (int i = 0; i < 12; ++i) window.push_back(label());
  TransitionMatrix m = TransitionMatrix::rebuild_counts(to_vec(window), k);

  for (int step = 0; step < 4000; ++step) {
    const std::vector<std::uint32_t> old_states = to_vec(window);
    const std::size_t evict = rng() % std::min<std::size_t>(3, window.size());
    for (std::size_t i = 0; i < evict; ++i) window.pop_front();

    // Occasionally relabel a retained position, as a recluster would.
    std::vector<std::uint8_t> changed(k, 0);
    if (rng() % 4 == 0 && !window.empty()) {
      const std::size_t pos = rng() % window.size();
      const std::uint32_t fresh = label();
      if (fresh != window[pos]) {
        changed[window[pos]] = 1;
        changed[fresh] = 1;
        window[pos] = fresh;
      }
    }
    window.push_back(label());

    std::vector<StateEdge> evicted_edges;
    for (std::size_t j = 0; j < evict && j + 1 < old_states.size(); ++j) {
      evicted_edges.emplace_back(old_states[j], old_states[j + 1]);
    }
    std::optional<StateEdge> appended;
    if (window.size() >= 2) appended = StateEdge{window[window.size() - 2], window.back()};

    const std::vector<std::uint32_t> new_states = to_vec(window);
    m.refresh(new_states, changed, evicted_edges, appended);
    REQUIRE(m == TransitionMatrix::rebuild_counts(new_states, k));
  }
}

TEST_CASE("refresh rejects inconsistent inputs") {
  TransitionMatrix m = TransitionMatrix::rebuild_counts(std::vector<std::uint32_t>{0, 0}, 3);
  const std::vector<std::uint32_t> next{0};

  // Decrementing a transition that was never counted is a hard error.
  CHECK_THROWS_AS(m.refresh(next, std::vector<std::uint8_t>(3, 0),
                            std::vector<StateEdge>{{1, 2}}, std::nullopt),
                  StateError);
  // Flag vector must have one slot per state.
  CHECK_THROWS_AS(m.refresh(next, std::vector<std::uint8_t>(2, 0), {}, std::nullopt), StateError);
  // Labels beyond the state count are rejected up front.
  CHECK_THROWS_AS(m.refresh(std::vector<std::uint32_t>{7}, std::vector<std::uint8_t>(3, 0), {},
                            std::nullopt),
                  StateError);
}

TEST_CASE("to_csv writes probability rows") {
  TransitionMatrix m = TransitionMatrix::rebuild_counts(std::vector<std::uint32_t>{0, 1, 0, 2}, 3);
  // Row 0: two exits, to 1 and to 2. Row 1: one exit to 0. Row 2: none.
  CHECK(m.to_csv() == "0,0.5,0.5\n1,0,0\n0,0,0\n");
}
