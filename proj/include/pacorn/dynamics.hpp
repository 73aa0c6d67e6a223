#pragma once

// City-move dynamics: once per cycle a random city jumps to a random point of
// the annulus rad/3 <= r <= rad around its previous position.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "pacorn/aco.hpp"
#include "pacorn/errors.hpp"
#include "pacorn/instance.hpp"

namespace pacorn {

inline constexpr double kInnerRatio = 1.0 / 3.0;

struct DynamicsConfig {
  bool enabled = true;
  int interval_mod = 100;  // iterations per cycle
  double rad = 0.0;        // <= 0: derive from the instance with compute_rad
  std::uint64_t seed = 1;  // move stream, independent of colony streams

  void validate() const {
    if (interval_mod < 4) throw std::invalid_argument("interval_mod must be at least 4");
    if (enabled && rad <= 0.0) throw std::invalid_argument("rad must be positive");
  }
};

struct CityMove {
  std::int64_t cycle = 0;
  City city = 0;
  Point old_pos;
  Point new_pos;

  friend bool operator==(const CityMove&, const CityMove&) = default;
};

/// 10% of the mean side of the original bounding box.
inline double compute_rad(const Instance& inst) {
  const BoundingBox& b = inst.original_bbox();
  const double xm = b.width();
  const double ym = b.height();
  if (xm <= 0.0 && ym <= 0.0) throw std::invalid_argument("degenerate instance: all cities coincide");
  return 0.1 * (xm + ym) / 2.0;
}

/// Area-uniform point of the annulus [rad/3, rad] around `center`.
inline Point sample_ring_point(Point center, double rad, Rng& rng) {
  if (!(rad > 0.0)) throw std::invalid_argument("rad must be positive");
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double inner = rad * kInnerRatio;
  for (;;) {
    const double theta = angle(rng);
    const double r = std::sqrt(unit(rng) * (rad * rad - inner * inner) + inner * inner);
    const Point p{center.x + r * std::cos(theta), center.y + r * std::sin(theta)};
    // Rounding in the sum can push the realised displacement a few ulps out.
    const double realised = std::hypot(p.x - center.x, p.y - center.y);
    if (realised >= inner && realised <= rad) return p;
  }
}

/// Replica side: overwrite the city and repair candidate lists.
/// Throws StaleMove (state untouched) unless `move.cycle` is newer than the
/// last move applied to `inst`.
inline void apply_move(Instance& inst, const CityMove& move) {
  if (move.city < 0 || move.city >= inst.size()) throw std::invalid_argument("move names an unknown city");
  if (const auto last = inst.last_move_cycle(); last && move.cycle <= *last) {
    throw StaleMove("move for cycle " + std::to_string(move.cycle) + " is not newer than cycle " +
                    std::to_string(*last));
  }
  inst.move_city(move.city, move.new_pos, move.cycle);
}

/// Master side: pick a city uniformly, sample its new position, apply it.
inline CityMove perturb_instance(Instance& inst, const DynamicsConfig& cfg, std::int64_t cycle, Rng& rng) {
  if (!cfg.enabled) throw IllegalState("dynamics disabled");
  std::uniform_int_distribution<City> pick(0, inst.size() - 1);
  CityMove move;
  move.cycle = cycle;
  move.city = pick(rng);
  move.old_pos = inst.coord(move.city);
  move.new_pos = sample_ring_point(move.old_pos, cfg.rad, rng);
  apply_move(inst, move);
  return move;
}

inline Tour reevaluate_tour(const Instance& inst, Tour tour) {
  tour.length = tour_length(inst, tour.order);
  return tour;
}

/// The shared move stream; serial and parallel runs seeded alike see the
/// same sequence of moves.
class MoveStream {
 public:
  explicit MoveStream(DynamicsConfig cfg) : cfg_(cfg), rng_(cfg.seed) {}

  const DynamicsConfig& config() const { return cfg_; }
  CityMove next(Instance& inst, std::int64_t cycle) { return perturb_instance(inst, cfg_, cycle, rng_); }

 private:
  DynamicsConfig cfg_;
  Rng rng_;
};

/// Run-log line "cycle,city,old_x,old_y,new_x,new_y" (full precision).
inline std::string format_move(const CityMove& m) {
  std::ostringstream out;
  out.precision(17);
  out << m.cycle << ',' << m.city << ',' << m.old_pos.x << ',' << m.old_pos.y << ',' << m.new_pos.x << ','
      << m.new_pos.y;
  return out.str();
}

inline CityMove parse_move(const std::string& line) {
  std::istringstream in(line);
  CityMove m;
  char c1 = 0, c2 = 0, c3 = 0, c4 = 0, c5 = 0;
  if (!(in >> m.cycle >> c1 >> m.city >> c2 >> m.old_pos.x >> c3 >> m.old_pos.y >> c4 >> m.new_pos.x >> c5 >>
        m.new_pos.y) ||
      c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',' || c5 != ',') {
    throw std::invalid_argument("malformed move log line: " + line);
  }
  return m;
}

}  // namespace pacorn
