#pragma once

// Candidate-list 2-opt and 3-opt with don't-look bits (first improvement).

#include <algorithm>
#include <array>
#include <deque>
#include <span>
#include <utility>
#include <vector>

#include "pacorn/instance.hpp"

namespace pacorn {

enum class LocalSearchKind { none, two_opt, three_opt };

struct LocalSearchConfig {
  LocalSearchKind kind = LocalSearchKind::three_opt;
  bool use_dont_look_bits = true;
  int candidate_k = kDefaultCandidates;
};

namespace detail {

// Array tour with a position index. Orientation is not significant.
class TourArray {
 public:
  explicit TourArray(std::vector<City> order) : order_(std::move(order)), pos_(order_.size()) {
    for (std::size_t i = 0; i < order_.size(); ++i) pos_[static_cast<std::size_t>(order_[i])] = static_cast<int>(i);
  }

  int size() const { return static_cast<int>(order_.size()); }
  int pos(City c) const { return pos_[static_cast<std::size_t>(c)]; }
  City at(int p) const { return order_[static_cast<std::size_t>(p)]; }
  City succ(City c) const { return at(pos(c) + 1 == size() ? 0 : pos(c) + 1); }
  City pred(City c) const { return at(pos(c) == 0 ? size() - 1 : pos(c) - 1); }
  City step(City c, bool forward) const { return forward ? succ(c) : pred(c); }
  bool adjacent(City a, City b) const { return succ(a) == b || pred(a) == b; }
  std::vector<City>& order() { return order_; }

  // Reverses the cyclic path from a (inclusive) forward to b (inclusive), or
  // the complementary path when that one is shorter.
  void reverse_path(City a, City b) {
    const int n = size();
    int len = (pos(b) - pos(a) + n) % n + 1;
    if (2 * len > n) {
      const City a2 = succ(b);
      const City b2 = pred(a);
      a = a2;
      b = b2;
      len = n - len;
    }
    int i = pos(a);
    int j = pos(b);
    for (int s = 0; s < len / 2; ++s) {
      std::swap(order_[static_cast<std::size_t>(i)], order_[static_cast<std::size_t>(j)]);
      pos_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])] = i;
      pos_[static_cast<std::size_t>(order_[static_cast<std::size_t>(j)])] = j;
      i = (i + 1 == n) ? 0 : i + 1;
      j = (j == 0) ? n - 1 : j - 1;
    }
  }

  // Removes (a, succ a) and (b, succ b), adds (a, b) and (succ a, succ b).
  void apply_2opt(City a, City b) { reverse_path(succ(a), b); }

  // Generic reconnection: `removed` are tour edges, `added` the replacement
  // edges. Returns false (tour untouched) if the result is not one cycle.
  bool apply_kopt(std::span<const std::pair<City, City>> removed,
                  std::span<const std::pair<City, City>> added) {
    std::vector<City> next;
    if (!reconnect(removed, added, &next)) return false;
    order_ = std::move(next);
    for (std::size_t i = 0; i < order_.size(); ++i) pos_[static_cast<std::size_t>(order_[i])] = static_cast<int>(i);
    return true;
  }

  bool reconnect(std::span<const std::pair<City, City>> removed,
                 std::span<const std::pair<City, City>> added, std::vector<City>* out) const {
    const int n = size();
    const std::size_t k = removed.size();
    if (k < 2 || k > 3 || added.size() != k) return false;
    std::array<int, 3> cuts{};
    for (std::size_t e = 0; e < k; ++e) {
      const auto [x, y] = removed[e];
      if (succ(x) == y) {
        cuts[e] = pos(x);
      } else if (succ(y) == x) {
        cuts[e] = pos(y);
      } else {
        return false;
      }
    }
    std::sort(cuts.begin(), cuts.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t e = 1; e < k; ++e)
      if (cuts[e] == cuts[e - 1]) return false;

    // Segment s spans positions cuts[s]+1 .. cuts[s+1] (cyclically).
    struct Segment {
      int first;
      int last;
    };
    std::array<Segment, 3> seg{};
    for (std::size_t s = 0; s < k; ++s) {
      const int begin = (cuts[s] + 1) % n;
      const int end = cuts[(s + 1) % k];
      seg[s] = {begin, end};
    }
    // Slot 2*s is the head of segment s, 2*s+1 its tail.
    std::array<int, 6> link{};
    link.fill(-1);
    auto slot_of = [&](City c, int exclude) {
      for (std::size_t s = 0; s < k; ++s) {
        const int head = static_cast<int>(2 * s);
        if (at(seg[s].first) == c && link[static_cast<std::size_t>(head)] < 0 && head != exclude) return head;
        if (at(seg[s].last) == c && link[static_cast<std::size_t>(head + 1)] < 0 && head + 1 != exclude) return head + 1;
      }
      return -1;
    };
    for (const auto& [u, v] : added) {
      if (u == v) return false;
      const int su = slot_of(u, -1);
      if (su < 0) return false;
      const int sv = slot_of(v, su);
      if (sv < 0 || sv / 2 == su / 2) return false;
      link[static_cast<std::size_t>(su)] = sv;
      link[static_cast<std::size_t>(sv)] = su;
    }

    std::vector<City> next;
    next.reserve(static_cast<std::size_t>(n));
    int slot = 0;  // enter segment 0 at its head
    for (std::size_t visited = 0; visited < k; ++visited) {
      const int s = slot / 2;
      const bool forward = (slot % 2) == 0;
      const Segment g = seg[static_cast<std::size_t>(s)];
      const int len = (g.last - g.first + n) % n + 1;
      for (int t = 0; t < len; ++t) {
        const int p = forward ? (g.first + t) % n : (g.last - t + n) % n;
        next.push_back(at(p));
      }
      const int exit_slot = forward ? 2 * s + 1 : 2 * s;
      slot = link[static_cast<std::size_t>(exit_slot)];
      if (slot / 2 == 0 && visited + 1 < k) return false;
    }
    if (slot != 0 || static_cast<int>(next.size()) != n) return false;
    if (out) *out = std::move(next);
    return true;
  }

 private:
  std::vector<City> order_;
  std::vector<int> pos_;
};

class Improver {
 public:
  Improver(const Instance& inst, const LocalSearchConfig& cfg, TourArray& tour, Length& length)
      : inst_(inst), cfg_(cfg), tour_(tour), length_(length),
        k_(std::min(cfg.candidate_k, inst.candidate_count())) {}

  void run() {
    const int n = tour_.size();
    if (!cfg_.use_dont_look_bits) {
      bool any = true;
      while (any) {
        any = false;
        for (int p = 0; p < n; ++p)
          while (improve_city(tour_.at(p))) any = true;
      }
      return;
    }
    std::vector<char> active(static_cast<std::size_t>(n));
    std::deque<City> queue;
    // A round ends when every bit is set; a fresh round with all bits clear
    // confirms the fixpoint.
    for (;;) {
      bool improved = false;
      for (int p = 0; p < n; ++p) {
        queue.push_back(tour_.at(p));
        active[static_cast<std::size_t>(tour_.at(p))] = 1;
      }
      while (!queue.empty()) {
        const City c = queue.front();
        queue.pop_front();
        active[static_cast<std::size_t>(c)] = 0;
        if (improve_city(c)) {
          improved = true;
          for (City t : touched_) {
            if (!active[static_cast<std::size_t>(t)]) {
              active[static_cast<std::size_t>(t)] = 1;
              queue.push_back(t);
            }
          }
        }
      }
      if (!improved) return;
    }
  }

 private:
  Length d(City a, City b) const { return inst_.distance(a, b); }
  std::span<const City> candidates(City c) const { return inst_.neighbors(c).first(static_cast<std::size_t>(k_)); }

  bool improve_city(City t1) {
    if (improve_2opt(t1)) return true;
    return cfg_.kind == LocalSearchKind::three_opt && tour_.size() >= 5 && improve_3opt(t1);
  }

  // Every 2-exchange that adds edge (t1, t3) for a candidate t3.
  bool improve_2opt(City a) {
    for (const bool forward : {true, false}) {
      const City sa = tour_.step(a, forward);
      for (City b : candidates(a)) {
        const City sb = tour_.step(b, forward);
        if (b == sa || sb == a) continue;
        const Length gain = d(a, sa) + d(b, sb) - d(a, b) - d(sa, sb);
        if (gain > 0) {
          if (forward) {
            tour_.apply_2opt(a, b);
          } else {
            tour_.apply_2opt(sb, sa);
          }
          length_ -= gain;
          touched_ = {a, sa, b, sb};
          return true;
        }
      }
    }
    return false;
  }

  // Sequential 3-exchange: remove (t1,t2), add (t2,t3), remove (t3,t4),
  // add (t4,t5), remove (t5,t6), close with (t6,t1). Partial gains must stay
  // positive.
  bool improve_3opt(City t1) {
    for (const bool forward : {true, false}) {
      const City t2 = tour_.step(t1, forward);
      const Length g0 = d(t1, t2);
      for (City t3 : candidates(t2)) {
        const Length g1 = g0 - d(t2, t3);
        if (g1 <= 0) break;
        if (tour_.adjacent(t2, t3)) continue;
        for (const City t4 : {tour_.succ(t3), tour_.pred(t3)}) {
          const Length g1b = g1 + d(t3, t4);
          for (City t5 : candidates(t4)) {
            const Length g2 = g1b - d(t4, t5);
            if (g2 <= 0) break;
            if (tour_.adjacent(t4, t5)) continue;
            for (const City t6 : {tour_.succ(t5), tour_.pred(t5)}) {
              if (t6 == t1) continue;
              const Length gain = g2 + d(t5, t6) - d(t6, t1);
              if (gain <= 0) continue;
              const std::array<std::pair<City, City>, 3> removed{{{t1, t2}, {t3, t4}, {t5, t6}}};
              const std::array<std::pair<City, City>, 3> added{{{t2, t3}, {t4, t5}, {t6, t1}}};
              if (tour_.apply_kopt(removed, added)) {
                length_ -= gain;
                touched_ = {t1, t2, t3, t4, t5, t6};
                return true;
              }
            }
          }
        }
      }
    }
    return false;
  }

  const Instance& inst_;
  const LocalSearchConfig& cfg_;
  TourArray& tour_;
  Length& length_;
  int k_;
  std::vector<City> touched_;
};

inline Tour run_local_search(const Instance& inst, Tour tour, LocalSearchConfig cfg) {
  if (cfg.kind == LocalSearchKind::none) return tour;
  if (cfg.kind == LocalSearchKind::three_opt && inst.size() < 5) cfg.kind = LocalSearchKind::two_opt;
  if (cfg.candidate_k < 2) throw std::invalid_argument("local search needs candidate_k >= 2");
  TourArray arr(std::move(tour.order));
  Length length = tour.length;
  if (cfg.kind == LocalSearchKind::three_opt) {
    // The 3-opt phase starts from the 2-opt fixpoint, so its result is never
    // longer than plain 2-opt from the same tour.
    LocalSearchConfig first = cfg;
    first.kind = LocalSearchKind::two_opt;
    Improver(inst, first, arr, length).run();
  }
  Improver(inst, cfg, arr, length).run();
  return Tour{std::move(arr.order()), length};
}

}  // namespace detail

/// Candidate-restricted 2-opt. The input length must be current.
inline Tour two_opt(const Instance& inst, Tour tour, LocalSearchConfig cfg = {}) {
  cfg.kind = LocalSearchKind::two_opt;
  return detail::run_local_search(inst, std::move(tour), cfg);
}

/// Candidate-restricted sequential 3-opt (includes the 2-opt moves). Falls
/// back to 2-opt for n < 5.
inline Tour three_opt(const Instance& inst, Tour tour, LocalSearchConfig cfg = {}) {
  cfg.kind = LocalSearchKind::three_opt;
  return detail::run_local_search(inst, std::move(tour), cfg);
}

inline Tour local_search(const Instance& inst, Tour tour, const LocalSearchConfig& cfg) {
  return detail::run_local_search(inst, std::move(tour), cfg);
}

}  // namespace pacorn
