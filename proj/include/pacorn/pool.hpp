#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "pacorn/instance.hpp"

namespace pacorn {

/// Rotation to start at city 0, oriented so the second city is the smaller
/// of city 0's two tour neighbours. Rotations and reflections of one cycle
/// share a canonical form.
inline std::vector<City> canonical_order(std::span<const City> order) {
  const std::size_t n = order.size();
  const auto zero = static_cast<std::size_t>(std::find(order.begin(), order.end(), City{0}) - order.begin());
  const City next = order[(zero + 1) % n];
  const City prev = order[(zero + n - 1) % n];
  std::vector<City> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    out.push_back(next <= prev ? order[(zero + s) % n] : order[(zero + n - s) % n]);
  }
  return out;
}

struct PoolEntry {
  std::vector<City> order;  // canonical form
  Length length = 0;
  double found_at = 0.0;  // seconds since run start
  int worker = 0;

  friend bool operator==(const PoolEntry&, const PoolEntry&) = default;
};

/// The master's elite set: at most `kCapacity` distinct tours, ascending by length.
class SolutionPool {
 public:
  static constexpr std::size_t kCapacity = 10;

  /// Inserted iff not a duplicate and the pool has room or `length` beats
  /// the worst entry (which is then evicted).
  bool insert(std::span<const City> order, Length length, double found_at, int worker) {
    std::vector<City> canon = canonical_order(order);
    if (std::any_of(entries_.begin(), entries_.end(), [&](const PoolEntry& e) { return e.order == canon; }))
      return false;
    if (entries_.size() == kCapacity && length >= entries_.back().length) return false;
    auto pos = std::upper_bound(entries_.begin(), entries_.end(), length,
                                [](Length l, const PoolEntry& e) { return l < e.length; });
    entries_.insert(pos, PoolEntry{std::move(canon), length, found_at, worker});
    if (entries_.size() > kCapacity) entries_.pop_back();
    return true;
  }

  /// Re-evaluates every entry under the current coordinates and re-sorts.
  void restore(const Instance& inst) {
    for (PoolEntry& e : entries_) e.length = tour_length_unchecked(inst, e.order);
    std::stable_sort(entries_.begin(), entries_.end(),
                     [](const PoolEntry& a, const PoolEntry& b) { return a.length < b.length; });
  }

  const std::vector<PoolEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const PoolEntry& head() const { return entries_.front(); }

 private:
  std::vector<PoolEntry> entries_;
};

}  // namespace pacorn
