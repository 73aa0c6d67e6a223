#pragma once

// Euclidean TSP instances: TSPLIB EUC_2D parsing/writing, the rounded metric,
// tour evaluation and nearest-neighbour candidate lists.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pacorn/errors.hpp"

namespace pacorn {

using City = std::int32_t;
using Length = std::int64_t;

inline constexpr int kDefaultCandidates = 20;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct BoundingBox {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// TSPLIB EUC_2D: Euclidean norm rounded half-up to the nearest integer.
inline Length euc2d_distance(Point p, Point q) {
  const double dx = p.x - q.x;
  const double dy = p.y - q.y;
  return static_cast<Length>(std::floor(std::sqrt(dx * dx + dy * dy) + 0.5));
}

inline BoundingBox bounding_box(std::span<const Point> pts) {
  BoundingBox b{pts.front().x, pts.front().x, pts.front().y, pts.front().y};
  for (const Point& p : pts) {
    b.x_min = std::min(b.x_min, p.x);
    b.x_max = std::max(b.x_max, p.x);
    b.y_min = std::min(b.y_min, p.y);
    b.y_max = std::max(b.y_max, p.y);
  }
  return b;
}

class Instance;
std::vector<std::vector<City>> build_neighbor_lists(const Instance& inst, int k);

/// A symmetric 2D Euclidean instance.
///
/// Coordinates are the single source of truth: distances are computed on
/// demand (or served from an optional cache for small n), and moving a city
/// repairs only the candidate lists the move can affect. The bounding box is
/// frozen at construction and describes the original coordinates.
class Instance {
 public:
  Instance(std::string name, std::vector<Point> coords, int candidates = kDefaultCandidates)
      : name_(std::move(name)), coords_(std::move(coords)) {
    if (coords_.size() < 3) {
      throw std::invalid_argument("instance needs at least 3 cities, got " +
                                  std::to_string(coords_.size()));
    }
    for (const Point& p : coords_) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw std::invalid_argument("non-finite coordinate in instance " + name_);
      }
    }
    bbox_ = bounding_box(coords_);
    set_candidate_count(std::min(candidates, size() - 1));
  }

  const std::string& name() const { return name_; }
  int size() const { return static_cast<int>(coords_.size()); }
  const std::vector<Point>& coords() const { return coords_; }
  Point coord(City c) const { return coords_[static_cast<std::size_t>(c)]; }
  const BoundingBox& original_bbox() const { return bbox_; }

  Length distance(City i, City j) const {
    if (!cache_.empty()) return cache_[static_cast<std::size_t>(i) * coords_.size() + j];
    return euc2d_distance(coords_[static_cast<std::size_t>(i)], coords_[static_cast<std::size_t>(j)]);
  }

  int candidate_count() const { return k_; }
  std::span<const City> neighbors(City c) const { return nn_[static_cast<std::size_t>(c)]; }
  const std::vector<std::vector<City>>& neighbor_lists() const { return nn_; }

  /// Rebuilds every candidate list with `k` entries (1 <= k <= n-1).
  void set_candidate_count(int k) {
    nn_ = build_neighbor_lists(*this, k);
    k_ = k;
  }

  static constexpr int kMaxCachedSize = 1000;

  /// Full n x n distance cache; only offered for n <= 1000.
  void enable_distance_cache() {
    if (size() > kMaxCachedSize) {
      throw std::invalid_argument("distance cache limited to n <= 1000");
    }
    const auto n = coords_.size();
    std::vector<Length> cache(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) cache[i * n + j] = euc2d_distance(coords_[i], coords_[j]);
    cache_ = std::move(cache);
  }
  bool distance_cached() const { return !cache_.empty(); }

  /// Cycle index of the last city move applied, if any.
  std::optional<std::int64_t> last_move_cycle() const { return last_move_cycle_; }

  /// Overwrites one city's position and repairs distances and candidate lists.
  void move_city(City c, Point pos, std::int64_t cycle) {
    coords_[static_cast<std::size_t>(c)] = pos;
    last_move_cycle_ = cycle;
    if (!cache_.empty()) {
      const auto n = coords_.size();
      for (std::size_t j = 0; j < n; ++j) {
        const Length d = euc2d_distance(pos, coords_[j]);
        cache_[static_cast<std::size_t>(c) * n + j] = d;
        cache_[j * n + static_cast<std::size_t>(c)] = d;
      }
    }
    repair_neighbor_lists(c);
  }

  /// Coordinates, frozen bbox, candidate lists and move stamp all match.
  friend bool operator==(const Instance& a, const Instance& b) {
    return a.name_ == b.name_ && a.coords_ == b.coords_ && a.bbox_ == b.bbox_ && a.k_ == b.k_ &&
           a.nn_ == b.nn_ && a.last_move_cycle_ == b.last_move_cycle_;
  }

 private:

  using Key = std::pair<Length, City>;
  Key key(City owner, City other) const { return {distance(owner, other), other}; }

  void rebuild_one(City owner) {
    std::vector<Key> keys;
    keys.reserve(coords_.size() - 1);
    for (City j = 0; j < size(); ++j)
      if (j != owner) keys.push_back(key(owner, j));
    std::partial_sort(keys.begin(), keys.begin() + k_, keys.end());
    auto& list = nn_[static_cast<std::size_t>(owner)];
    list.resize(static_cast<std::size_t>(k_));
    for (int r = 0; r < k_; ++r) list[static_cast<std::size_t>(r)] = keys[static_cast<std::size_t>(r)].second;
  }

  void insert_sorted(City owner, City moved) {
    auto& list = nn_[static_cast<std::size_t>(owner)];
    const Key kc = key(owner, moved);
    auto pos = std::find_if(list.begin(), list.end(), [&](City j) { return kc < key(owner, j); });
    list.insert(pos, moved);
  }

  // Only keys involving `moved` changed, so each foreign list either keeps its
  // members, gains/loses `moved`, or (when `moved` drops out and outsiders
  // exist) needs the next-nearest outsider, which requires a scan.
  void repair_neighbor_lists(City moved) {
    rebuild_one(moved);
    const bool has_outsiders = k_ < size() - 1;
    for (City i = 0; i < size(); ++i) {
      if (i == moved) continue;
      auto& list = nn_[static_cast<std::size_t>(i)];
      auto it = std::find(list.begin(), list.end(), moved);
      const Key kc = key(i, moved);
      if (it != list.end()) {
        const Key old_last = key(i, list.back());
        const bool moved_was_last = list.back() == moved;
        list.erase(it);
        // Outsiders all rank after the old last member; if `moved` was the
        // last, its old key is gone and only a scan can order it against them.
        if (!has_outsiders || (!moved_was_last && kc < old_last)) {
          insert_sorted(i, moved);
        } else {
          rebuild_one(i);
        }
      } else if (kc < key(i, list.back())) {
        list.pop_back();
        insert_sorted(i, moved);
      }
    }
  }

  std::string name_;
  std::vector<Point> coords_;
  BoundingBox bbox_;
  int k_ = 0;
  std::vector<std::vector<City>> nn_;
  std::vector<Length> cache_;
  std::optional<std::int64_t> last_move_cycle_;
};

/// For each city, its `k` nearest other cities by (distance, index).
inline std::vector<std::vector<City>> build_neighbor_lists(const Instance& inst, int k) {
  const int n = inst.size();
  if (k < 1 || k > n - 1) {
    throw std::invalid_argument("candidate list size " + std::to_string(k) + " outside [1, " +
                                std::to_string(n - 1) + "]");
  }
  std::vector<std::vector<City>> lists(static_cast<std::size_t>(n));
  std::vector<std::pair<Length, City>> keys;
  keys.reserve(static_cast<std::size_t>(n));
  for (City i = 0; i < n; ++i) {
    keys.clear();
    for (City j = 0; j < n; ++j)
      if (j != i) keys.emplace_back(inst.distance(i, j), j);
    std::partial_sort(keys.begin(), keys.begin() + k, keys.end());
    auto& list = lists[static_cast<std::size_t>(i)];
    list.reserve(static_cast<std::size_t>(k));
    for (int r = 0; r < k; ++r) list.push_back(keys[static_cast<std::size_t>(r)].second);
  }
  return lists;
}

// ---------------------------------------------------------------------------
// Tours

struct Tour {
  std::vector<City> order;
  Length length = 0;

  friend bool operator==(const Tour&, const Tour&) = default;
};

inline bool is_permutation_of_cities(std::span<const City> order, int n) {
  if (static_cast<int>(order.size()) != n) return false;
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (City c : order) {
    if (c < 0 || c >= n || seen[static_cast<std::size_t>(c)]) return false;
    seen[static_cast<std::size_t>(c)] = 1;
  }
  return true;
}

/// Closed-tour length without validating `order`.
inline Length tour_length_unchecked(const Instance& inst, std::span<const City> order) {
  Length total = 0;
  const std::size_t n = order.size();
  for (std::size_t i = 0; i + 1 < n; ++i) total += inst.distance(order[i], order[i + 1]);
  return total + inst.distance(order[n - 1], order[0]);
}

inline Length tour_length(const Instance& inst, std::span<const City> order) {
  if (!is_permutation_of_cities(order, inst.size())) {
    throw NotAPermutation("order is not a permutation of 0.." + std::to_string(inst.size() - 1));
  }
  return tour_length_unchecked(inst, order);
}

inline Tour make_tour(const Instance& inst, std::vector<City> order) {
  const Length len = tour_length(inst, order);
  return Tour{std::move(order), len};
}

// ---------------------------------------------------------------------------
// TSPLIB I/O (EUC_2D subset)

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline Instance parse_tsplib(std::istream& in, int candidates = kDefaultCandidates) {
  std::string name;
  std::optional<long> dimension;
  std::optional<std::string> weight_type;
  std::vector<Point> coords;
  std::vector<char> seen;
  bool in_coords = false;
  std::size_t lineno = 0;
  std::string raw;

  while (std::getline(in, raw)) {
    ++lineno;
    const std::string_view line = detail::trim(raw);
    if (line.empty()) continue;
    if (line == "EOF") break;

    if (in_coords) {
      std::istringstream row{std::string(line)};
      long idx = 0;
      Point p;
      if (!(row >> idx >> p.x >> p.y)) throw ParseError("malformed coordinate row", lineno);
      std::string extra;
      if (row >> extra) throw ParseError("trailing data on coordinate row", lineno);
      if (idx < 1 || idx > *dimension) throw ParseError("node index out of range", lineno);
      auto slot = static_cast<std::size_t>(idx - 1);
      if (seen[slot]) throw ParseError("duplicate node index " + std::to_string(idx), lineno);
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw ParseError("non-finite coordinate", lineno);
      seen[slot] = 1;
      coords[slot] = p;
      continue;
    }

    if (line == "NODE_COORD_SECTION") {
      if (!dimension) throw ParseError("NODE_COORD_SECTION before DIMENSION", lineno);
      if (!weight_type) throw ParseError("NODE_COORD_SECTION before EDGE_WEIGHT_TYPE", lineno);
      in_coords = true;
      continue;
    }

    const auto colon = line.find(':');
    if (colon == std::string_view::npos) throw ParseError("expected 'KEY : VALUE'", lineno);
    const auto key = detail::trim(line.substr(0, colon));
    const auto value = std::string(detail::trim(line.substr(colon + 1)));
    if (key == "NAME") {
      name = value;
    } else if (key == "TYPE") {
      if (value != "TSP") throw ParseError("unsupported problem TYPE " + value, lineno);
    } else if (key == "DIMENSION") {
      try {
        std::size_t used = 0;
        const long d = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        dimension = d;
      } catch (const std::exception&) {
        throw ParseError("DIMENSION is not an integer", lineno);
      }
      if (*dimension < 3) throw ParseError("DIMENSION must be at least 3", lineno);
      coords.assign(static_cast<std::size_t>(*dimension), Point{});
      seen.assign(static_cast<std::size_t>(*dimension), 0);
    } else if (key == "EDGE_WEIGHT_TYPE") {
      if (value != "EUC_2D") throw UnsupportedMetric("EDGE_WEIGHT_TYPE " + value + " is not supported");
      weight_type = value;
    } else if (key.empty()) {
      throw ParseError("empty header key", lineno);
    }
    // COMMENT and other informational keys are ignored.
  }

  if (!in_coords) throw ParseError("missing NODE_COORD_SECTION", 0);
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw ParseError("missing node index " + std::to_string(i + 1), 0);
  }
  return Instance(name, std::move(coords), candidates);
}

inline Instance parse_tsplib(std::string_view text, int candidates = kDefaultCandidates) {
  std::istringstream in{std::string(text)};
  return parse_tsplib(in, candidates);
}

inline Instance load_tsplib(const std::string& path, int candidates = kDefaultCandidates) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file " + path);
  return parse_tsplib(in, candidates);
}

/// Writes the EUC_2D subset; coordinates round-trip exactly.
inline void write_tsplib(std::ostream& out, const Instance& inst) {
  out << "NAME : " << inst.name() << '\n'
      << "TYPE : TSP\n"
      << "DIMENSION : " << inst.size() << '\n'
      << "EDGE_WEIGHT_TYPE : EUC_2D\n"
      << "NODE_COORD_SECTION\n";
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  for (City i = 0; i < inst.size(); ++i) {
    const Point p = inst.coord(i);
    out << (i + 1) << ' ' << p.x << ' ' << p.y << '\n';
  }
  out.precision(old_precision);
  out << "EOF\n";
}

}  // namespace pacorn
