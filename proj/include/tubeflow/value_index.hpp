#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace tubeflow {

// Aggregates over a contiguous run of the value order.
struct RankAggregate {
  std::size_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
};

// Order-statistics multiset over doubles: an AVL tree augmented with subtree
// count, sum and sum of squares. rank / select / rank-range aggregates all
// run in O(log n). Nodes live in an index-based arena with a free list, so
// steady-state churn (one insert + one erase per window slide) does not
// allocate. Duplicate keys are kept in insertion order.
class ValueIndex {
 public:
  ValueIndex() = default;

  void insert(double v);
  // Removes one instance of v (the topmost match); false if absent.
  bool erase_one(double v);
  void clear();

  std::size_t size() const { return root_ == kNil ? 0 : nodes_[root_].count; }
  bool empty() const { return root_ == kNil; }

  // Number of values strictly below / at or below v.
  std::size_t rank_lt(double v) const;
  std::size_t rank_le(double v) const;
  // r-th smallest value, 0-based. BoundsError when r >= size().
  double select(std::size_t r) const;
  // Count, sum and sum of squares over the value ranks [lo, hi). Fully
  // contained subtrees contribute their precomputed aggregates, so no
  // subtraction of large prefix sums happens. BoundsError on a bad range.
  RankAggregate aggregate(std::size_t lo, std::size_t hi) const;
  double sum(std::size_t lo, std::size_t hi) const;

  // Tree height; the balance test checks it stays logarithmic.
  int height() const { return root_ == kNil ? 0 : nodes_[root_].height; }

 private:
  static constexpr std::int32_t kNil = -1;

  struct Node {
    double key;
    std::int32_t left;
    std::int32_t right;
    std::int32_t height;
    std::size_t count;
    double sum;
    double sum_sq;
  };

  int hgt(std::int32_t t) const { return t == kNil ? 0 : nodes_[t].height; }
  std::size_t cnt(std::int32_t t) const { return t == kNil ? 0 : nodes_[t].count; }
  void pull(std::int32_t t);
  std::int32_t rotate_right(std::int32_t t);
  std::int32_t rotate_left(std::int32_t t);
  std::int32_t rebalance(std::int32_t t);
  std::int32_t make_node(double v);
  void free_node(std::int32_t t);
  std::int32_t insert_rec(std::int32_t t, std::int32_t node);
  std::int32_t erase_rec(std::int32_t t, double v, bool& erased);
  std::int32_t erase_min(std::int32_t t, std::int32_t& removed);
  void collect(std::int32_t t, std::size_t lo, std::size_t hi, RankAggregate& acc) const;

  std::vector<Node> nodes_;
  std::vector<std::int32_t> free_;
  std::int32_t root_ = kNil;
};

}  // namespace tubeflow
