#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>

#include "tubeflow/error.hpp"

namespace tubeflow {

// Blocking bounded FIFO connecting one pipeline stage to the next. close()
// ends the stream: pushes fail, pops drain what is left. cancel() aborts:
// pending and future operations give up immediately.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {
    if (capacity < 1) throw ConfigError("queue: capacity must be >= 1");
  }

  // Blocks while full. False once the queue is closed or cancelled.
  bool push(T item) {
    std::unique_lock lk(mu_);
    not_full_.wait(lk, [&] { return items_.size() < capacity_ || closed_ || cancelled_; });
    if (closed_ || cancelled_) return false;
    items_.push_back(std::move(item));
    lk.unlock();
    not_empty_.notify_one();
    return true;
  }

  // Blocks while empty and open. Empty result at close-and-drained or cancel.
  std::optional<T> pop() {
    std::unique_lock lk(mu_);
    not_empty_.wait(lk, [&] { return !items_.empty() || closed_ || cancelled_; });
    if (cancelled_ || items_.empty()) return std::nullopt;
    std::optional<T> out(std::move(items_.front()));
    items_.pop_front();
    lk.unlock();
    not_full_.notify_one();
    return out;
  }

  std::optional<T> try_pop() {
    std::unique_lock lk(mu_);
    if (cancelled_ || items_.empty()) return std::nullopt;
    std::optional<T> out(std::move(items_.front()));
    items_.pop_front();
    lk.unlock();
    not_full_.notify_one();
    return out;
  }

  std::optional<T> front() const {
    std::lock_guard lk(mu_);
    if (cancelled_ || items_.empty()) return std::nullopt;
    return items_.front();
  }

  void close() {
    {
      std::lock_guard lk(mu_);
      closed_ = true;
    }
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  void cancel() {
    {
      std::lock_guard lk(mu_);
      cancelled_ = true;
    }
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  bool closed() const {
    std::lock_guard lk(mu_);
    return closed_ || cancelled_;
  }

  std::size_t size() const {
    std::lock_guard lk(mu_);
    return items_.size();
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<T> items_;
  bool closed_ = false;
  bool cancelled_ = false;
};

// Versioned wakeup channel. A consumer snapshots the version, examines
// whatever state it watches, and waits only if the version is unchanged, so
// updates between examine and wait are never lost.
class ProgressSignal {
 public:
  void bump() {
    {
      std::lock_guard lk(mu_);
      ++version_;
    }
    cv_.notify_all();
  }

  std::uint64_t snapshot() const {
    std::lock_guard lk(mu_);
    return version_;
  }

  void wait(std::uint64_t seen) {
    std::unique_lock lk(mu_);
    cv_.wait(lk, [&] { return version_ != seen; });
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::uint64_t version_ = 0;
};

}  // namespace tubeflow
