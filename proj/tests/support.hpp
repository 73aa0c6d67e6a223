#pragma once

// Independent oracles shared by the test suites.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "pacorn/instance.hpp"

namespace pacorn::testing {

inline std::string data_path(const std::string& file) { return std::string(PACORN_DATA_DIR) + "/" + file; }

inline Instance random_instance(int n, std::uint64_t seed, double side = 1000.0, int k = kDefaultCandidates) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, side);
  std::vector<Point> pts(static_cast<std::size_t>(n));
  for (Point& p : pts) p = {u(rng), u(rng)};
  return Instance("rand", pts, k);
}

inline std::vector<City> random_order(int n, std::mt19937_64& rng) {
  std::vector<City> o(static_cast<std::size_t>(n));
  std::iota(o.begin(), o.end(), 0);
  std::shuffle(o.begin(), o.end(), rng);
  return o;
}

// Direct from coordinates, never through Instance::distance.
inline Length naive_distance(Point p, Point q) {
  const double dx = p.x - q.x;
  const double dy = p.y - q.y;
  return static_cast<Length>(std::floor(std::sqrt(dx * dx + dy * dy) + 0.5));
}

inline Length naive_length(const Instance& inst, const std::vector<City>& order) {
  Length sum = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    sum += naive_distance(inst.coord(order[i]), inst.coord(order[(i + 1) % order.size()]));
  }
  return sum;
}

// Minimum over all (n-1)! orders starting at city 0.
inline Length brute_force_optimum(const Instance& inst) {
  std::vector<City> rest(static_cast<std::size_t>(inst.size() - 1));
  std::iota(rest.begin(), rest.end(), 1);
  Length best = std::numeric_limits<Length>::max();
  do {
    std::vector<City> order{0};
    order.insert(order.end(), rest.begin(), rest.end());
    best = std::min(best, naive_length(inst, order));
  } while (std::next_permutation(rest.begin(), rest.end()));
  return best;
}

inline bool in_list(std::span<const City> list, City c) { return std::find(list.begin(), list.end(), c) != list.end(); }

// True when no 2-exchange adding an edge (a, b) with b a candidate of a
// shortens the tour.
inline bool two_opt_stable(const Instance& inst, const std::vector<City>& order, int k) {
  const auto n = order.size();
  std::vector<std::size_t> pos(n);
  for (std::size_t i = 0; i < n; ++i) pos[static_cast<std::size_t>(order[i])] = i;
  auto d = [&](City a, City b) { return naive_distance(inst.coord(a), inst.coord(b)); };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      const City a = order[i], sa = order[i + 1], b = order[j], sb = order[(j + 1) % n];
      const auto la = inst.neighbors(a).first(static_cast<std::size_t>(k));
      const auto lsa = inst.neighbors(sa).first(static_cast<std::size_t>(k));
      const auto lb = inst.neighbors(b).first(static_cast<std::size_t>(k));
      const auto lsb = inst.neighbors(sb).first(static_cast<std::size_t>(k));
      const bool candidate = in_list(la, b) || in_list(lb, a) || in_list(lsa, sb) || in_list(lsb, sa);
      if (candidate && d(a, sa) + d(b, sb) > d(a, b) + d(sa, sb)) return false;
    }
  }
  return true;
}

}  // namespace pacorn::testing
