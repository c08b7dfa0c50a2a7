#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "tubeflow/value_index.hpp"

namespace tubeflow {

enum class WindowMode {
  count,  // retain exactly the newest `capacity` events (canonical)
  time,   // retain events with timestamp > newest - capacity
};

struct WindowEntry {
  std::int64_t timestamp = 0;
  double value = 0.0;

  friend bool operator==(const WindowEntry&, const WindowEntry&) = default;
};

// Sliding window over one sensor's recent events. Keeps two views of the
// same multiset: arrival order (for transition sequences and eviction) and
// the value order (for rank / select / segment aggregate queries, O(log W)).
class EventWindow {
 public:
  explicit EventWindow(std::int64_t capacity, WindowMode mode = WindowMode::count);

  // Appends an event and returns whatever fell out of the window: at most
  // one entry in count mode, possibly several in time mode. Timestamps must
  // be nonnegative and nondecreasing per window.
  std::vector<WindowEntry> push(std::int64_t timestamp, double value);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::int64_t capacity() const { return capacity_; }
  WindowMode mode() const { return mode_; }

  // Arrival order; index 0 is the oldest retained event.
  const WindowEntry& at(std::size_t i) const;
  const std::deque<WindowEntry>& entries() const { return entries_; }
  std::int64_t newest_timestamp() const;

  // Value-order queries, delegated to the index.
  std::size_t rank_lt(double v) const { return index_.rank_lt(v); }
  std::size_t rank_le(double v) const { return index_.rank_le(v); }
  double select(std::size_t r) const { return index_.select(r); }
  RankAggregate segment_aggregate(std::size_t lo, std::size_t hi) const {
    return index_.aggregate(lo, hi);
  }
  double segment_sum(std::size_t lo, std::size_t hi) const { return index_.sum(lo, hi); }
  double total_sum() const { return index_.sum(0, index_.size()); }
  int index_height() const { return index_.height(); }

 private:
  std::int64_t capacity_;
  WindowMode mode_;
  std::deque<WindowEntry> entries_;
  ValueIndex index_;
};

}  // namespace tubeflow
