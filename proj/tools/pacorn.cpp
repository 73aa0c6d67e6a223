// pacorn: run serial or master-slave ACO experiments on a TSPLIB instance.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "pacorn/bench.hpp"

namespace {

const std::map<std::string, bool> kOnOff{{"on", true}, {"off", false}};

}  // namespace

int main(int argc, char** argv) {
  using namespace pacorn;

  CLI::App app{"Parallel MAX-MIN ant system for the dynamic TSP"};
  app.set_version_flag("--version", "pacorn 1.0");

  ExperimentSpec spec;
  RunConfig& cfg = spec.run;
  std::string mode = "serial";
  bool copy_ant = false;
  bool dynamic = true;
  std::string ls = "3opt";
  std::string format = "csv";
  std::optional<int> workers;
  std::int64_t iters = 0;
  double time_s = 0.0;
  std::uint64_t seed = 1;

  app.add_option("--instance", spec.instance_path, "TSPLIB EUC_2D instance")->required()->check(CLI::ExistingFile);
  app.add_option("--workers", workers, "number of colonies (master included)")->check(CLI::Range(1, 1024));
  app.add_option("--mode", mode, "serial | sr | gs")->check(CLI::IsMember({"serial", "sr", "gs"}));
  app.add_option("--copy-ant", copy_ant, "on | off")->transform(CLI::CheckedTransformer(kOnOff));
  app.add_option("--ants", cfg.colony.ants, "ants per colony")->check(CLI::PositiveNumber);
  app.add_option("--alpha", cfg.colony.alpha, "pheromone exponent");
  app.add_option("--beta", cfg.colony.beta, "heuristic exponent");
  app.add_option("--rho", cfg.colony.rho, "evaporation rate");
  app.add_option("--ls", ls, "none | 2opt | 3opt")->check(CLI::IsMember({"none", "2opt", "3opt"}));
  app.add_option("--interval-mod", cfg.dynamics.interval_mod, "iterations per dynamic cycle");
  app.add_option("--dynamic", dynamic, "on | off")->transform(CLI::CheckedTransformer(kOnOff));
  auto* t_opt = app.add_option("--time-s", time_s, "wall-clock budget per run")->check(CLI::PositiveNumber);
  auto* i_opt = app.add_option("--iters", iters, "iteration budget per run")->check(CLI::NonNegativeNumber);
  t_opt->excludes(i_opt);
  app.add_option("--reps", spec.repetitions, "repetitions (seed + index)")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "base seed for colonies and city moves");
  app.add_option("--optimum-file", spec.optima_path, "name/optimum table")->check(CLI::ExistingFile);
  app.add_option("--out", spec.out_path, "report file (default stdout)");
  app.add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--latency-ms", cfg.latency_ms, "synthetic per-message latency")->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (!t_opt->count() && !i_opt->count()) throw std::invalid_argument("one of --time-s or --iters is required");
    if (t_opt->count()) cfg.budget.seconds = time_s;
    if (i_opt->count()) cfg.budget.iterations = iters;

    if (mode == "serial") {
      if (workers && *workers != 1) throw std::invalid_argument("--mode serial runs exactly one worker");
      cfg.workers = 1;
    } else {
      cfg.workers = workers.value_or(2);
      if (cfg.workers < 2) throw std::invalid_argument("--mode " + mode + " needs at least 2 workers");
      cfg.exchange = mode == "sr" ? ExchangeMode::sr : ExchangeMode::gs;
    }
    cfg.copy_ant = copy_ant;
    cfg.dynamics.enabled = dynamic;
    cfg.colony.local_search = ls == "none" ? LocalSearchKind::none
                              : ls == "2opt" ? LocalSearchKind::two_opt
                                             : LocalSearchKind::three_opt;
    cfg.seed = seed;
    cfg.dynamics.seed = seed;
    if (const char* dir = std::getenv("PACORN_LOG_DIR")) cfg.log_dir = dir;
    spec.format = format == "csv" ? ReportFormat::csv : ReportFormat::json;

    const AggregateReport agg = run_experiment(spec);
    const std::string text = format_report(agg, spec.format);
    if (spec.out_path.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(spec.out_path, std::ios::binary);
      if (!(out << text)) throw std::runtime_error("cannot write " + spec.out_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "pacorn: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
