#include "tubeflow/window.hpp"

#include <cmath>
#include <string>

#include "tubeflow/error.hpp"

namespace tubeflow {

EventWindow::EventWindow(std::int64_t capacity, WindowMode mode)
    : capacity_(capacity), mode_(mode) {
  if (capacity < 1) throw ConfigError("window: capacity must be >= 1");
}

const WindowEntry& EventWindow::at(std::size_t i) const {
  if (i >= entries_.size()) throw BoundsError("window: entry index out of range");
  return entries_[i];
}

std::int64_t EventWindow::newest_timestamp() const {
  if (entries_.empty()) throw StateError("window: empty");
  return entries_.back().timestamp;
}

std::vector<WindowEntry> EventWindow::push(std::int64_t timestamp, double value) {
  if (timestamp < 0) throw OrderingError("window: negative timestamp");
  if (!std::isfinite(value)) throw StateError("window: non-finite value");
  if (!entries_.empty() && timestamp < entries_.back().timestamp) {
    throw OrderingError("window: out-of-order timestamp " + std::to_string(timestamp) +
                        " after " + std::to_string(entries_.back().timestamp));
  }

  entries_.push_back(WindowEntry{timestamp, value});
  index_.insert(value);

  std::vector<WindowEntry> evicted;
  if (mode_ == WindowMode::count) {
    if (entries_.size() > static_cast<std::size_t>(capacity_)) {
      evicted.push_back(entries_.front());
      index_.erase_one(entries_.front().value);
      entries_.pop_front();
    }
  } else {
    while (entries_.front().timestamp <= timestamp - capacity_) {
      evicted.push_back(entries_.front());
      index_.erase_one(entries_.front().value);
      entries_.pop_front();
    }
  }
  return evicted;
}

}  // namespace tubeflow
