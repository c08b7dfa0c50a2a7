#include "tubeflow/value_index.hpp"

#include <algorithm>
#include <cmath>

#include "tubeflow/error.hpp"

namespace tubeflow {

void ValueIndex::pull(std::int32_t t) {
  Node& n = nodes_[t];
  n.height = 1 + std::max(hgt(n.left), hgt(n.right));
  n.count = 1 + cnt(n.left) + cnt(n.right);
  n.sum = n.key;
  n.sum_sq = n.key * n.key;
  if (n.left != kNil) {
    n.sum += nodes_[n.left].sum;
    n.sum_sq += nodes_[n.left].sum_sq;
  }
  if (n.right != kNil) {
    n.sum += nodes_[n.right].sum;
    n.sum_sq += nodes_[n.right].sum_sq;
  }
}

std::int32_t ValueIndex::rotate_right(std::int32_t t) {
  std::int32_t l = nodes_[t].left;
  nodes_[t].left = nodes_[l].right;
  nodes_[l].right = t;
  pull(t);
  pull(l);
  return l;
}

std::int32_t ValueIndex::rotate_left(std::int32_t t) {
  std::int32_t r = nodes_[t].right;
  nodes_[t].right = nodes_[r].left;
  nodes_[r].left = t;
  pull(t);
  pull(r);
  return r;
}

std::int32_t ValueIndex::rebalance(std::int32_t t) {
  pull(t);
  int bf = hgt(nodes_[t].left) - hgt(nodes_[t].right);
  if (bf > 1) {
    std::int32_t l = nodes_[t].left;
    if (hgt(nodes_[l].left) < hgt(nodes_[l].right)) nodes_[t].left = rotate_left(l);
    return rotate_right(t);
  }
  if (bf < -1) {
    std::int32_t r = nodes_[t].right;
    if (hgt(nodes_[r].right) < hgt(nodes_[r].left)) nodes_[t].right = rotate_right(r);
    return rotate_left(t);
  }
  return t;
}

std::int32_t ValueIndex::make_node(double v) {
  std::int32_t i;
  if (!free_.empty()) {
    i = free_.back();
    free_.pop_back();
  } else {
    i = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
  }
  nodes_[i] = Node{v, kNil, kNil, 1, 1, v, v * v};
  return i;
}

void ValueIndex::free_node(std::int32_t t) { free_.push_back(t); }

std::int32_t ValueIndex::insert_rec(std::int32_t t, std::int32_t node) {
  if (t == kNil) return node;
  if (nodes_[node].key < nodes_[t].key) {
    nodes_[t].left = insert_rec(nodes_[t].left, node);
  } else {
    // Equal keys go right, which keeps duplicates in insertion order.
    nodes_[t].right = insert_rec(nodes_[t].right, node);
  }
  return rebalance(t);
}

void ValueIndex::insert(double v) {
  if (!std::isfinite(v)) throw StateError("value index: non-finite value");
  root_ = insert_rec(root_, make_node(v));
}

std::int32_t ValueIndex::erase_min(std::int32_t t, std::int32_t& removed) {
  if (nodes_[t].left == kNil) {
    removed = t;
    return nodes_[t].right;
  }
  nodes_[t].left = erase_min(nodes_[t].left, removed);
  return rebalance(t);
}

std::int32_t ValueIndex::erase_rec(std::int32_t t, double v, bool& erased) {
  if (t == kNil) return kNil;
  if (v < nodes_[t].key) {
    nodes_[t].left = erase_rec(nodes_[t].left, v, erased);
  } else if (nodes_[t].key < v) {
    nodes_[t].right = erase_rec(nodes_[t].right, v, erased);
  } else {
    erased = true;
    if (nodes_[t].left == kNil || nodes_[t].right == kNil) {
      std::int32_t child = nodes_[t].left != kNil ? nodes_[t].left : nodes_[t].right;
      free_node(t);
      return child;
    }
    // Two children: take the successor's key, then unlink the successor.
    std::int32_t s = nodes_[t].right;
    while (nodes_[s].left != kNil) s = nodes_[s].left;
    nodes_[t].key = nodes_[s].key;
    std::int32_t removed = kNil;
    nodes_[t].right = erase_min(nodes_[t].right, removed);
    free_node(removed);
  }
  return rebalance(t);
}

bool ValueIndex::erase_one(double v) {
  bool erased = false;
  root_ = erase_rec(root_, v, erased);
  return erased;
}

void ValueIndex::clear() {
  nodes_.clear();
  free_.clear();
  root_ = kNil;
}

std::size_t ValueIndex::rank_lt(double v) const {
  std::size_t acc = 0;
  std::int32_t t = root_;
  while (t != kNil) {
    if (nodes_[t].key < v) {
      acc += cnt(nodes_[t].left) + 1;
      t = nodes_[t].right;
    } else {
      t = nodes_[t].left;
    }
  }
  return acc;
}

std::size_t ValueIndex::rank_le(double v) const {
  std::size_t acc = 0;
  std::int32_t t = root_;
  while (t != kNil) {
    if (nodes_[t].key <= v) {
      acc += cnt(nodes_[t].left) + 1;
      t = nodes_[t].right;
    } else {
      t = nodes_[t].left;
    }
  }
  return acc;
}

double ValueIndex::select(std::size_t r) const {
  if (r >= size()) throw BoundsError("value index: select rank out of range");
  std::int32_t t = root_;
  for (;;) {
    std::size_t lc = cnt(nodes_[t].left);
    if (r < lc) {
      t = nodes_[t].left;
    } else if (r == lc) {
      return nodes_[t].key;
    } else {
      r -= lc + 1;
      t = nodes_[t].right;
    }
  }
}

void ValueIndex::collect(std::int32_t t, std::size_t lo, std::size_t hi, RankAggregate& acc) const {
  if (t == kNil || lo >= hi) return;
  const Node& n = nodes_[t];
  if (lo == 0 && hi == n.count) {
    acc.count += n.count;
    acc.sum += n.sum;
    acc.sum_sq += n.sum_sq;
    return;
  }
  std::size_t lc = cnt(n.left);
  if (lo < lc) collect(n.left, lo, std::min(hi, lc), acc);
  if (lo <= lc && lc < hi) {
    acc.count += 1;
    acc.sum += n.key;
    acc.sum_sq += n.key * n.key;
  }
  if (hi > lc + 1) collect(n.right, lo > lc + 1 ? lo - lc - 1 : 0, hi - lc - 1, acc);
}

RankAggregate ValueIndex::aggregate(std::size_t lo, std::size_t hi) const {
  if (lo > hi || hi > size()) throw BoundsError("value index: aggregate range out of bounds");
  RankAggregate acc;
  collect(root_, lo, hi, acc);
  return acc;
}

double ValueIndex::sum(std::size_t lo, std::size_t hi) const { return aggregate(lo, hi).sum; }

}  // namespace tubeflow
