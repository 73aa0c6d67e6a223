#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "pacorn/errors.hpp"

namespace pacorn {

/// Ordered, reliable, single-consumer queue. A message sent at time t
/// becomes receivable at t + latency. Closing wakes every waiter with
/// RunAborted.
template <typename T>
class Channel {
 public:
  using Clock = std::chrono::steady_clock;

  explicit Channel(Clock::duration latency = Clock::duration::zero()) : latency_(latency) {}

  void send(T msg) {
    {
      std::lock_guard lock(mu_);
      queue_.emplace_back(Clock::now() + latency_, std::move(msg));
    }
    cv_.notify_all();
  }

  /// Blocks until a message is due; nullopt once `deadline` passes.
  std::optional<T> receive_until(Clock::time_point deadline) {
    std::unique_lock lock(mu_);
    for (;;) {
      if (closed_) throw RunAborted("channel closed: " + reason_);
      const auto now = Clock::now();
      if (!queue_.empty() && queue_.front().first <= now) {
        T msg = std::move(queue_.front().second);
        queue_.pop_front();
        return msg;
      }
      if (now >= deadline) return std::nullopt;
      auto wake = deadline;
      if (!queue_.empty()) wake = std::min(wake, queue_.front().first);
      cv_.wait_until(lock, wake);
    }
  }

  std::optional<T> receive_for(Clock::duration timeout) { return receive_until(Clock::now() + timeout); }

  std::optional<T> try_receive() { return receive_until(Clock::now()); }

  void close(std::string reason) {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
      reason_ = std::move(reason);
    }
    cv_.notify_all();
  }

 private:
  Clock::duration latency_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::pair<Clock::time_point, T>> queue_;
  bool closed_ = false;
  std::string reason_;
};

}  // namespace pacorn
