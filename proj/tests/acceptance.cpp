// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "pacorn/bench.hpp"

using namespace pacorn;

namespace {

std::string data(const std::string& file) { return std::string(PACORN_DATA_DIR) + "/" + file; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Length naive_length(const Instance& inst, const std::vector<City>& order) {
  Length sum = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Point p = inst.coord(order[i]);
    const Point q = inst.coord(order[(i + 1) % order.size()]);
    sum += static_cast<Length>(std::floor(std::hypot(p.x - q.x, p.y - q.y) + 0.5));
  }
  return sum;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1 ------------------------------------------------------------------------
Outcome static_sanity() {
  const Instance inst = load_tsplib(data("berlin52.tsp"));
  const Length opt = load_optima(data("optima.txt")).at(inst.name());
  const auto t0 = std::chrono::steady_clock::now();
  int within = 0;
  std::string gaps;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RunConfig cfg;
    cfg.budget.iterations = 5000;
    cfg.colony.ants = 25;
    cfg.colony.local_search = LocalSearchKind::two_opt;
    cfg.dynamics.enabled = false;
    cfg.optimum = opt;
    cfg.seed = seed;
    const RunReport r = run(inst, cfg);
    if (*r.best_gap <= 2.0) ++within;
    gaps += fmt(" %.2f", *r.best_gap);
  }
  const double secs = seconds_since(t0);
  return {within >= 9 && secs < 120.0, fmt("%d/10 seeds within 2.0%% in %.1f s; gaps", within, secs) + gaps};
}

// 2 ------------------------------------------------------------------------
Outcome exact_oracle() {
  int hits = 0;
  int below = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const int n = 5 + static_cast<int>(i % 5);
    const Instance inst = generate_random_instance(n, BoundingBox{0, 1000, 0, 1000}, 100 + i);
    const Length opt = exact_optimum(inst).length;
    RunConfig cfg;
    cfg.budget.iterations = 200;
    cfg.colony.ants = 10;
    cfg.colony.local_search = LocalSearchKind::two_opt;
    cfg.dynamics.enabled = false;
    cfg.seed = i + 1;
    const RunReport r = run(inst, cfg);
    for (const PoolEntry& e : r.pool)
      if (e.length < opt || naive_length(inst, e.order) < opt) ++below;
    if (r.pool.front().length == opt) ++hits;
  }
  return {hits >= 19 && below == 0, fmt("%d/20 runs reached the exact optimum, %d pool tours below it", hits, below)};
}

// 3 ------------------------------------------------------------------------
Outcome trail_bounds() {
  Rng fuzz(77);
  Instance inst = generate_random_instance(80, BoundingBox{0, 500, 0, 500}, 3, 10);
  ColonyParams p;
  p.ants = 10;
  p.candidate_k = 10;
  p.local_search = LocalSearchKind::none;
  p.restart_threshold = 60;
  p.seed = 5;
  Colony colony(inst, p);
  DynamicsConfig dyn;
  dyn.rad = compute_rad(inst);
  Rng moves(9);
  std::int64_t violations = 0;
  std::int64_t checked = 0;
  auto check = [&] {
    const TrailLimits lim = colony.pheromone().limits();
    for (double tau : colony.pheromone().values()) {
      ++checked;
      if (tau < lim.tau_min || tau > lim.tau_max) ++violations;
    }
  };
  for (int it = 0; it < 1000; ++it) {
    switch (fuzz() % 8) {
      case 0:
        perturb_instance(inst, dyn, it, moves);
        colony.on_instance_changed();
        break;
      case 1: {
        std::vector<City> order(static_cast<std::size_t>(inst.size()));
        for (City c = 0; c < inst.size(); ++c) order[static_cast<std::size_t>(c)] = c;
        std::shuffle(order.begin(), order.end(), fuzz);
        if (fuzz() % 2) {
          colony.adopt_best_so_far(order);
        } else {
          colony.set_copy_ant(order);
        }
        break;
      }
      case 2:
        colony.clear_copy_ant();
        break;
      default:
        break;
    }
    check();
    colony.run_iteration();
    check();
  }
  return {violations == 0, fmt("%lld violations over %lld trail checks", static_cast<long long>(violations),
                               static_cast<long long>(checked))};
}

// 4 ------------------------------------------------------------------------
Outcome local_search_fixpoint() {
  std::mt19937_64 rng(4);
  int worse = 0;
  int moved = 0;
  for (int i = 0; i < 1000; ++i) {
    const int n = 8 + static_cast<int>(rng() % 193);
    const Instance inst = generate_random_instance(n, BoundingBox{0, 1000, 0, 1000}, 1000 + i);
    std::vector<City> order(static_cast<std::size_t>(n));
    for (City c = 0; c < n; ++c) order[static_cast<std::size_t>(c)] = c;
    std::shuffle(order.begin(), order.end(), rng);
    const Tour in = make_tour(inst, order);
    const Tour once = three_opt(inst, in);
    const Tour twice = three_opt(inst, once);
    if (once.length > in.length || once.length != naive_length(inst, once.order)) ++worse;
    if (twice.length != once.length) ++moved;
  }
  return {worse == 0 && moved == 0, fmt("%d outputs longer than input, %d changed on reapplication", worse, moved)};
}

// 5 ------------------------------------------------------------------------
Outcome ring_geometry() {
  Instance inst = load_tsplib(data("pcb442.tsp"));
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (City c = 0; c < inst.size(); ++c) {
    xmin = std::min(xmin, inst.coord(c).x);
    xmax = std::max(xmax, inst.coord(c).x);
    ymin = std::min(ymin, inst.coord(c).y);
    ymax = std::max(ymax, inst.coord(c).y);
  }
  const double rad = 0.1 * ((xmax - xmin) + (ymax - ymin)) / 2.0;
  if (compute_rad(inst) != rad) return {false, fmt("rad %.6f differs from %.6f", compute_rad(inst), rad)};
  DynamicsConfig dyn;
  dyn.rad = rad;
  Rng rng(2024);
  const int draws = 100000;
  int outside = 0;
  int inner = 0;
  for (int i = 0; i < draws; ++i) {
    const CityMove m = perturb_instance(inst, dyn, i, rng);
    const double r = std::hypot(m.new_pos.x - m.old_pos.x, m.new_pos.y - m.old_pos.y);
    if (r < rad / 3 || r > rad) ++outside;
    if (r <= 2.0 * rad / 3.0) ++inner;
  }
  const double p = 0.375;
  const double sigma = std::sqrt(draws * p * (1 - p));
  const bool ratio_ok = std::abs(inner - draws * p) <= 3 * sigma;
  return {outside == 0 && ratio_ok, fmt("rad %.1f, %d outside the ring, inner fraction %.4f (3 sigma %.4f)", rad, outside,
                                        static_cast<double>(inner) / draws, 3 * sigma / draws)};
}

// 6 ------------------------------------------------------------------------
Outcome dynamic_consistency() {
  const Instance base = load_tsplib(data("eil51.tsp"));
  int mismatches = 0;
  std::string detail;
  for (int workers : {1, 2, 3}) {
    RunConfig cfg;
    cfg.workers = workers;
    cfg.exchange = workers == 3 ? ExchangeMode::gs : ExchangeMode::sr;
    cfg.budget.iterations = 400;
    cfg.colony.ants = 10;
    cfg.colony.local_search = LocalSearchKind::two_opt;
    cfg.dynamics.interval_mod = 8;
    cfg.seed = 3;
    cfg.dynamics.seed = 3;
    const RunReport r = run(base, cfg);
    Instance replay = base;
    for (const CityMove& m : r.moves) apply_move(replay, m);
    for (const PoolEntry& e : r.pool)
      if (e.length != naive_length(replay, e.order) || e.length != tour_length(replay, e.order)) ++mismatches;
    detail += fmt(" %s:%zu cycles/%zu entries", r.mode.c_str(), r.moves.size(), r.pool.size());
    if (r.moves.size() < 50) ++mismatches;
  }
  return {mismatches == 0, fmt("%d mismatches;", mismatches) + detail};
}

// 7, 8 ----------------------------------------------------------------------
struct PairedRuns {
  std::vector<double> serial, sr, sr_copy;
  double seconds = 0.0;
};

PairedRuns paired_runs() {
  const Instance inst = load_tsplib(data("pcb442.tsp"));
  const Length opt = load_optima(data("optima.txt")).at(inst.name());
  PairedRuns out;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RunConfig cfg;
    cfg.budget.iterations = 200;
    cfg.colony.ants = 25;
    cfg.optimum = opt;
    cfg.seed = seed;
    cfg.dynamics.seed = seed;
    out.serial.push_back(*run(inst, cfg).best_gap);
    cfg.workers = 2;
    cfg.exchange = ExchangeMode::sr;
    out.sr.push_back(*run(inst, cfg).best_gap);
    cfg.copy_ant = true;
    out.sr_copy.push_back(*run(inst, cfg).best_gap);
  }
  out.seconds = seconds_since(t0);
  return out;
}

Outcome paired_trend(const std::vector<double>& better, const std::vector<double>& base, double seconds) {
  int wins = 0;
  std::string gaps;
  for (std::size_t i = 0; i < better.size(); ++i) {
    if (better[i] <= base[i]) ++wins;
    gaps += fmt(" %.2f/%.2f", better[i], base[i]);
  }
  return {wins >= 7, fmt("%d/10 pairs (%.0f s total); gaps", wins, seconds) + gaps};
}

// 9 ------------------------------------------------------------------------
Outcome communication_overhead() {
  const Instance inst = load_tsplib(data("berlin52.tsp"));
  int ordered = 0;
  std::string counts;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::int64_t its[3];
    int idx = 0;
    for (int workers : {1, 2, 2}) {
      RunConfig cfg;
      cfg.workers = workers;
      cfg.exchange = idx == 2 ? ExchangeMode::gs : ExchangeMode::sr;
      cfg.budget.seconds = 3.0;
      cfg.latency_ms = 1.0;
      cfg.colony.ants = 25;
      cfg.colony.local_search = LocalSearchKind::two_opt;
      cfg.dynamics.interval_mod = 8;
      cfg.seed = seed;
      cfg.dynamics.seed = seed;
      its[idx++] = run(inst, cfg).iterations_total;
    }
    if (its[0] > its[1] && its[1] > its[2]) ++ordered;
    counts += fmt(" %lld>%lld>%lld", static_cast<long long>(its[0]), static_cast<long long>(its[1]),
                  static_cast<long long>(its[2]));
  }
  return {ordered >= 4, fmt("%d/5 seeds ordered serial>sr>gs;", ordered) + counts};
}

// 10 -----------------------------------------------------------------------
std::string strip_time_columns(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::string cell;
    std::istringstream row(line);
    while (std::getline(row, cell, ',')) cols.push_back(cell);
    if (!line.empty() && line.back() == ',') cols.emplace_back();
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i == 7 || i == 8) continue;
      out << cols[i] << ',';
    }
    out << '\n';
  }
  return out.str();
}

Outcome cli_determinism() {
  const auto dir = std::filesystem::temp_directory_path() / ("pacorn-accept-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  std::string outputs[2];
  for (int i = 0; i < 2; ++i) {
    const auto file = dir / ("run" + std::to_string(i) + ".csv");
    const std::string cmd = std::string("\"") + PACORN_CLI + "\" --instance \"" + data("eil51.tsp") +
                            "\" --mode sr --workers 3 --iters 120 --ants 10 --ls 2opt --interval-mod 8 --reps 2" +
                            " --seed 42 --optimum-file \"" + data("optima.txt") + "\" --out \"" + file.string() + "\"";
    if (std::system(cmd.c_str()) != 0) return {false, "command failed: " + cmd};
    std::ifstream in(file);
    std::stringstream ss;
    ss << in.rdbuf();
    outputs[i] = ss.str();
  }
  std::filesystem::remove_all(dir);
  const bool same = !outputs[0].empty() && strip_time_columns(outputs[0]) == strip_time_columns(outputs[1]);
  return {same, same ? "CSV identical apart from time columns" : "CSV differs:\n" + outputs[0] + outputs[1]};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("criterion %2d %s: %s (%s)\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  };
  report(1, "static solver sanity", static_sanity());
  report(2, "exact oracle equivalence", exact_oracle());
  report(3, "trail bounds", trail_bounds());
  report(4, "local search monotone and fixpoint", local_search_fixpoint());
  report(5, "ring geometry", ring_geometry());
  report(6, "dynamic pool consistency", dynamic_consistency());
  const PairedRuns paired = paired_runs();
  report(7, "parallel vs serial best gap", paired_trend(paired.sr, paired.serial, paired.seconds));
  report(8, "copy_ant vs plain SR best gap", paired_trend(paired.sr_copy, paired.sr, paired.seconds));
  report(9, "communication overhead", communication_overhead());
  report(10, "CLI determinism", cli_determinism());
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
