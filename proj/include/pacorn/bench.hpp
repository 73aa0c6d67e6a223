#pragma once

// Experiment harness: repeated runs, aggregation, CSV/JSON reports, and the
// oracles used by the test suites (random instances, exact small-n optimum).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "pacorn/errors.hpp"
#include "pacorn/instance.hpp"
#include "pacorn/orchestrator.hpp"

namespace pacorn {

inline Instance generate_random_instance(int n, BoundingBox box, std::uint64_t seed,
                                         int candidates = kDefaultCandidates) {
  if (n < 3) throw std::invalid_argument("random instance needs n >= 3");
  Rng rng(seed);
  std::uniform_real_distribution<double> ux(box.x_min, box.x_max);
  std::uniform_real_distribution<double> uy(box.y_min, box.y_max);
  std::vector<Point> pts(static_cast<std::size_t>(n));
  for (Point& p : pts) {
    p.x = ux(rng);
    p.y = uy(rng);
  }
  return Instance("random" + std::to_string(n) + "-" + std::to_string(seed), std::move(pts), candidates);
}

/// Held-Karp dynamic program; exact for n <= 14.
inline Tour exact_optimum(const Instance& inst) {
  const int n = inst.size();
  if (n > 14) throw TooLarge("exact_optimum supports n <= 14, got " + std::to_string(n));
  const int m = n - 1;  // city 0 is the fixed start; bit j stands for city j+1
  const std::size_t full = std::size_t{1} << m;
  constexpr Length kInf = std::numeric_limits<Length>::max() / 4;
  std::vector<Length> dp(full * static_cast<std::size_t>(m), kInf);
  std::vector<std::int8_t> parent(full * static_cast<std::size_t>(m), -1);
  auto at = [&](std::size_t mask, int j) { return mask * static_cast<std::size_t>(m) + static_cast<std::size_t>(j); };

  for (int j = 0; j < m; ++j) dp[at(std::size_t{1} << j, j)] = inst.distance(0, j + 1);
  for (std::size_t mask = 1; mask < full; ++mask) {
    for (int j = 0; j < m; ++j) {
      if (!(mask >> j & 1u)) continue;
      const Length base = dp[at(mask, j)];
      if (base >= kInf) continue;
      for (int k = 0; k < m; ++k) {
        if (mask >> k & 1u) continue;
        const std::size_t next = mask | (std::size_t{1} << k);
        const Length cand = base + inst.distance(j + 1, k + 1);
        if (cand < dp[at(next, k)]) {
          dp[at(next, k)] = cand;
          parent[at(next, k)] = static_cast<std::int8_t>(j);
        }
      }
    }
  }
  Length best = kInf;
  int last = -1;
  for (int j = 0; j < m; ++j) {
    const Length total = dp[at(full - 1, j)] + inst.distance(j + 1, 0);
    if (total < best) {
      best = total;
      last = j;
    }
  }
  std::vector<City> order;
  std::size_t mask = full - 1;
  for (int j = last; j >= 0;) {
    order.push_back(j + 1);
    const int p = parent[at(mask, j)];
    mask &= ~(std::size_t{1} << j);
    j = p;
  }
  order.push_back(0);
  std::reverse(order.begin(), order.end());
  return Tour{std::move(order), best};
}

/// "name optimum" lines; '#' starts a comment.
inline std::map<std::string, Length> parse_optima(std::istream& in) {
  std::map<std::string, Length> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream row(line);
    std::string name;
    Length value = 0;
    if (!(row >> name)) continue;
    if (!(row >> value) || value <= 0) throw ParseError("malformed optimum entry", lineno);
    out[name] = value;
  }
  return out;
}

inline std::map<std::string, Length> load_optima(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open optima file " + path);
  return parse_optima(in);
}

// ---------------------------------------------------------------------------

enum class ReportFormat { csv, json };

struct ExperimentSpec {
  std::string instance_path;
  int repetitions = 1;
  RunConfig run;
  std::string optima_path;
  std::string out_path;
  ReportFormat format = ReportFormat::csv;
};

struct AggregateReport {
  std::vector<RunReport> runs;
  std::optional<double> mean_best_gap;
  std::optional<double> mean_avg3_gap;
  std::optional<double> mean_avg10_gap;
  std::optional<double> mean_time3_s;
  std::optional<double> mean_time10_s;
  double mean_iterations = 0.0;

  friend bool operator==(const AggregateReport&, const AggregateReport&) = default;
};

inline AggregateReport aggregate(std::vector<RunReport> runs) {
  AggregateReport agg;
  agg.runs = std::move(runs);
  auto mean = [&](auto field) -> std::optional<double> {
    double sum = 0.0;
    std::size_t count = 0;
    for (const RunReport& r : agg.runs) {
      if (const std::optional<double>& v = r.*field) {
        sum += *v;
        ++count;
      }
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
  };
  agg.mean_best_gap = mean(&RunReport::best_gap);
  agg.mean_avg3_gap = mean(&RunReport::avg3_gap);
  agg.mean_avg10_gap = mean(&RunReport::avg10_gap);
  agg.mean_time3_s = mean(&RunReport::avg_time3_s);
  agg.mean_time10_s = mean(&RunReport::avg_time10_s);
  if (!agg.runs.empty()) {
    double it = 0.0;
    for (const RunReport& r : agg.runs) it += static_cast<double>(r.iterations_total);
    agg.mean_iterations = it / static_cast<double>(agg.runs.size());
  }
  return agg;
}

/// Repetition r runs with colony and dynamics seeds offset by r.
inline AggregateReport run_experiment(const ExperimentSpec& spec) {
  if (spec.repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  const Instance inst = load_tsplib(spec.instance_path, spec.run.colony.candidate_k);
  RunConfig base = spec.run;
  if (!base.optimum && !spec.optima_path.empty()) {
    const auto optima = load_optima(spec.optima_path);
    if (auto it = optima.find(inst.name()); it != optima.end()) base.optimum = it->second;
  }
  std::vector<RunReport> runs;
  for (int r = 0; r < spec.repetitions; ++r) {
    RunConfig cfg = base;
    cfg.seed = base.seed + static_cast<std::uint64_t>(r);
    cfg.dynamics.seed = base.dynamics.seed + static_cast<std::uint64_t>(r);
    runs.push_back(run(inst, cfg));
  }
  return aggregate(std::move(runs));
}

// ---------------------------------------------------------------------------
// Report formatting

namespace detail {

inline std::string fixed2(const std::optional<double>& v) {
  if (!v) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", *v);
  return buf;
}

inline std::string whole(const std::optional<double>& v) {
  if (!v) return "";
  return std::to_string(std::llround(*v));
}

}  // namespace detail

inline constexpr const char* kCsvHeader =
    "instance,mode,workers,copy_ant,best_gap,avg3_gap,avg10_gap,avg_time3_s,avg_time10_s,iterations_total,seed";

/// One row per run; with several runs a final row of means (seed "mean").
inline std::string format_csv(const AggregateReport& agg) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const RunReport& r : agg.runs) {
    out << r.instance << ',' << r.mode << ',' << r.workers << ',' << (r.copy_ant ? "on" : "off") << ','
        << detail::fixed2(r.best_gap) << ',' << detail::fixed2(r.avg3_gap) << ',' << detail::fixed2(r.avg10_gap)
        << ',' << detail::whole(r.avg_time3_s) << ',' << detail::whole(r.avg_time10_s) << ','
        << r.iterations_total << ',' << r.seed << '\n';
  }
  if (agg.runs.size() > 1) {
    const RunReport& r = agg.runs.front();
    out << r.instance << ',' << r.mode << ',' << r.workers << ',' << (r.copy_ant ? "on" : "off") << ','
        << detail::fixed2(agg.mean_best_gap) << ',' << detail::fixed2(agg.mean_avg3_gap) << ','
        << detail::fixed2(agg.mean_avg10_gap) << ',' << detail::whole(agg.mean_time3_s) << ','
        << detail::whole(agg.mean_time10_s) << ',' << std::llround(agg.mean_iterations) << ",mean\n";
  }
  return out.str();
}

// JSON mapping ------------------------------------------------------------

namespace detail {

template <typename T>
void put_optional(nlohmann::json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
void get_optional(const nlohmann::json& j, const char* key, std::optional<T>& v) {
  if (j.contains(key) && !j.at(key).is_null()) {
    v = j.at(key).get<T>();
  } else {
    v.reset();
  }
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const Point& p) { j = nlohmann::json::array({p.x, p.y}); }
inline void from_json(const nlohmann::json& j, Point& p) {
  p.x = j.at(0).get<double>();
  p.y = j.at(1).get<double>();
}

inline void to_json(nlohmann::json& j, const CityMove& m) {
  j = {{"cycle", m.cycle}, {"city", m.city}, {"old", m.old_pos}, {"new", m.new_pos}};
}
inline void from_json(const nlohmann::json& j, CityMove& m) {
  j.at("cycle").get_to(m.cycle);
  j.at("city").get_to(m.city);
  j.at("old").get_to(m.old_pos);
  j.at("new").get_to(m.new_pos);
}

inline void to_json(nlohmann::json& j, const PoolEntry& e) {
  j = {{"order", e.order}, {"length", e.length}, {"found_at", e.found_at}, {"worker", e.worker}};
}
inline void from_json(const nlohmann::json& j, PoolEntry& e) {
  j.at("order").get_to(e.order);
  j.at("length").get_to(e.length);
  j.at("found_at").get_to(e.found_at);
  j.at("worker").get_to(e.worker);
}

inline void to_json(nlohmann::json& j, const ExchangeRecord& r) {
  j = {{"worker", r.worker},     {"iteration", r.iteration},       {"pool_head", r.pool_head},
       {"adopted", r.adopted},   {"local_reeval", r.local_reeval}, {"skipped", r.skipped}};
  detail::put_optional(j, "copy_ant", r.copy_ant);
}
inline void from_json(const nlohmann::json& j, ExchangeRecord& r) {
  j.at("worker").get_to(r.worker);
  j.at("iteration").get_to(r.iteration);
  j.at("pool_head").get_to(r.pool_head);
  j.at("adopted").get_to(r.adopted);
  j.at("local_reeval").get_to(r.local_reeval);
  j.at("skipped").get_to(r.skipped);
  detail::get_optional(j, "copy_ant", r.copy_ant);
}

inline void to_json(nlohmann::json& j, const RunReport& r) {
  j = {{"instance", r.instance},
       {"mode", r.mode},
       {"workers", r.workers},
       {"copy_ant", r.copy_ant},
       {"seed", r.seed},
       {"pool", r.pool},
       {"worker_iterations", r.worker_iterations},
       {"iterations_total", r.iterations_total},
       {"moves", r.moves},
       {"exchanges", r.exchanges},
       {"messages_lost", r.messages_lost},
       {"wall_seconds", r.wall_seconds}};
  detail::put_optional(j, "optimum", r.optimum);
  detail::put_optional(j, "best_gap", r.best_gap);
  detail::put_optional(j, "avg3_gap", r.avg3_gap);
  detail::put_optional(j, "avg10_gap", r.avg10_gap);
  detail::put_optional(j, "avg_time3_s", r.avg_time3_s);
  detail::put_optional(j, "avg_time10_s", r.avg_time10_s);
}
inline void from_json(const nlohmann::json& j, RunReport& r) {
  j.at("instance").get_to(r.instance);
  j.at("mode").get_to(r.mode);
  j.at("workers").get_to(r.workers);
  j.at("copy_ant").get_to(r.copy_ant);
  j.at("seed").get_to(r.seed);
  j.at("pool").get_to(r.pool);
  j.at("worker_iterations").get_to(r.worker_iterations);
  j.at("iterations_total").get_to(r.iterations_total);
  j.at("moves").get_to(r.moves);
  j.at("exchanges").get_to(r.exchanges);
  j.at("messages_lost").get_to(r.messages_lost);
  j.at("wall_seconds").get_to(r.wall_seconds);
  detail::get_optional(j, "optimum", r.optimum);
  detail::get_optional(j, "best_gap", r.best_gap);
  detail::get_optional(j, "avg3_gap", r.avg3_gap);
  detail::get_optional(j, "avg10_gap", r.avg10_gap);
  detail::get_optional(j, "avg_time3_s", r.avg_time3_s);
  detail::get_optional(j, "avg_time10_s", r.avg_time10_s);
}

inline void to_json(nlohmann::json& j, const AggregateReport& a) {
  j = {{"runs", a.runs}, {"mean_iterations", a.mean_iterations}};
  detail::put_optional(j, "mean_best_gap", a.mean_best_gap);
  detail::put_optional(j, "mean_avg3_gap", a.mean_avg3_gap);
  detail::put_optional(j, "mean_avg10_gap", a.mean_avg10_gap);
  detail::put_optional(j, "mean_time3_s", a.mean_time3_s);
  detail::put_optional(j, "mean_time10_s", a.mean_time10_s);
}
inline void from_json(const nlohmann::json& j, AggregateReport& a) {
  j.at("runs").get_to(a.runs);
  j.at("mean_iterations").get_to(a.mean_iterations);
  detail::get_optional(j, "mean_best_gap", a.mean_best_gap);
  detail::get_optional(j, "mean_avg3_gap", a.mean_avg3_gap);
  detail::get_optional(j, "mean_avg10_gap", a.mean_avg10_gap);
  detail::get_optional(j, "mean_time3_s", a.mean_time3_s);
  detail::get_optional(j, "mean_time10_s", a.mean_time10_s);
}

inline std::string format_report(const AggregateReport& agg, ReportFormat format) {
  if (format == ReportFormat::csv) return format_csv(agg);
  return nlohmann::json(agg).dump(2) + "\n";
}

}  // namespace pacorn
