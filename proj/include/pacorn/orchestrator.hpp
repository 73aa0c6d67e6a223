#pragma once

// Master-slave cooperative runs over the dynamic instance, plus the serial
// baseline. The master perturbs the instance once per cycle, keeps the
// top-10 pool and serves the slaves; slaves report their best-so-far four
// times per cycle and adopt the pool head (optionally as a copy_ant).

#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "pacorn/aco.hpp"
#include "pacorn/channel.hpp"
#include "pacorn/dynamics.hpp"
#include "pacorn/errors.hpp"
#include "pacorn/instance.hpp"
#include "pacorn/pool.hpp"

namespace pacorn {

enum class ExchangeMode { sr, gs };

struct Budget {
  std::optional<std::int64_t> iterations;
  std::optional<double> seconds;
};

struct RunConfig {
  int workers = 1;
  ExchangeMode exchange = ExchangeMode::sr;
  bool copy_ant = false;
  bool adopt_if_better = false;  // ablation; the protocol adopts unconditionally
  Budget budget;
  ColonyParams colony;
  DynamicsConfig dynamics;
  std::optional<Length> optimum;
  double latency_ms = 0.0;  // synthetic per-message latency
  double loss_rate = 0.0;   // SR only: probability a report or reply is dropped
  std::uint64_t seed = 1;   // base of the per-worker colony streams
  double exchange_timeout_s = 120.0;
  double loss_timeout_s = 0.25;
  std::string log_dir;

  int interval_mod() const { return dynamics.interval_mod; }
  int interval_update() const { return dynamics.interval_mod / 4; }

  void validate() const {
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
    if (dynamics.interval_mod < 4 || dynamics.interval_mod % 4 != 0)
      throw std::invalid_argument("interval_mod must be a positive multiple of 4");
    if (!budget.iterations && !budget.seconds) throw std::invalid_argument("run needs an iteration or time budget");
    if (budget.iterations && *budget.iterations < 0) throw std::invalid_argument("negative iteration budget");
    if (loss_rate < 0.0 || loss_rate >= 1.0) throw std::invalid_argument("loss_rate must lie in [0, 1)");
    if (loss_rate > 0.0 && exchange == ExchangeMode::gs)
      throw std::invalid_argument("message loss injection is only supported in SR mode");
    if (latency_ms < 0.0) throw std::invalid_argument("latency must be nonnegative");
    colony.validate();
  }
};

inline std::string mode_label(const RunConfig& cfg) {
  if (cfg.workers == 1) return "serial";
  return cfg.exchange == ExchangeMode::sr ? "sr" : "gs";
}

/// Signed percentage above the optimum.
inline double gap(Length length, Length optimum) {
  if (optimum <= 0) throw std::invalid_argument("optimum must be positive");
  return 100.0 * static_cast<double>(length - optimum) / static_cast<double>(optimum);
}

/// splitmix64 of (base, stream): independent colony streams per worker.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Protocol vocabulary

struct MoveBroadcast {
  CityMove move;
};

struct BestReport {
  std::vector<City> order;
  Length length = 0;
  int worker = 0;
  std::int64_t iteration = 0;
  double found_at = 0.0;
  bool final = false;
};

struct PoolBest {
  std::vector<City> order;
  Length length = 0;
  std::int64_t cycle = 0;
  std::int64_t iteration = 0;
};

struct Terminate {};

/// GS only: barrier arrival (slave to master) and release (master to slave).
struct BarrierSignal {
  std::int64_t iteration = 0;
};

using Message = std::variant<MoveBroadcast, BestReport, PoolBest, Terminate, BarrierSignal>;

// ---------------------------------------------------------------------------
// Reports

/// One slave-side adoption (or skipped adoption) at an exchange point.
struct ExchangeRecord {
  int worker = 0;
  std::int64_t iteration = 0;
  Length pool_head = 0;         // as sent by the master
  Length adopted = 0;           // slave best-so-far after the exchange
  Length local_reeval = 0;      // from-scratch length of the adopted tour on the slave
  std::optional<Length> copy_ant;
  bool skipped = false;

  friend bool operator==(const ExchangeRecord&, const ExchangeRecord&) = default;
};

struct RunReport {
  std::string instance;
  std::string mode;
  int workers = 1;
  bool copy_ant = false;
  std::uint64_t seed = 0;
  std::vector<PoolEntry> pool;
  std::vector<std::int64_t> worker_iterations;
  std::int64_t iterations_total = 0;  // protocol iterations of worker 0
  std::optional<Length> optimum;
  std::optional<double> best_gap;
  std::optional<double> avg3_gap;
  std::optional<double> avg10_gap;
  std::optional<double> avg_time3_s;
  std::optional<double> avg_time10_s;
  std::vector<CityMove> moves;
  std::vector<ExchangeRecord> exchanges;
  std::int64_t messages_lost = 0;
  double wall_seconds = 0.0;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

/// Fills the gap and time-to-find statistics from `pool` and `optimum`.
inline void compute_statistics(RunReport& r) {
  r.best_gap = r.avg3_gap = r.avg10_gap = r.avg_time3_s = r.avg_time10_s = std::nullopt;
  if (r.pool.empty()) return;
  auto mean_over = [&](std::size_t count, auto value) {
    count = std::min(count, r.pool.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < count; ++i) sum += value(r.pool[i]);
    return sum / static_cast<double>(count);
  };
  auto found = [](const PoolEntry& e) { return e.found_at; };
  r.avg_time3_s = mean_over(3, found);
  r.avg_time10_s = mean_over(SolutionPool::kCapacity, found);
  if (r.optimum) {
    auto g = [&](const PoolEntry& e) { return gap(e.length, *r.optimum); };
    r.best_gap = g(r.pool.front());
    r.avg3_gap = mean_over(3, g);
    r.avg10_gap = mean_over(SolutionPool::kCapacity, g);
  }
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline std::uint64_t digest(std::span<const City> order) {
  std::uint64_t h = 1469598103934665603ull;
  for (City c : canonical_order(order)) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

/// Optional protocol run-log: "seconds,worker,event,payload".
class EventLog {
 public:
  EventLog(const std::string& dir, const std::string& stem) {
    if (dir.empty()) return;
    std::filesystem::create_directories(dir);
    out_.open(std::filesystem::path(dir) / (stem + ".log"));
    moves_.open(std::filesystem::path(dir) / (stem + ".moves.csv"));
  }

  void event(double t, int worker, const char* kind, const std::string& payload) {
    if (!out_.is_open()) return;
    std::lock_guard lock(mu_);
    out_ << std::fixed << std::setprecision(6) << t << ',' << worker << ',' << kind << ',' << payload << '\n';
  }

  void move(const CityMove& m) {
    if (!moves_.is_open()) return;
    std::lock_guard lock(mu_);
    moves_ << format_move(m) << '\n';
  }

 private:
  std::mutex mu_;
  std::ofstream out_;
  std::ofstream moves_;
};

inline std::string tour_payload(std::span<const City> order, Length length) {
  std::ostringstream s;
  s << length << ':' << std::hex << digest(order);
  return s.str();
}

inline Instance prepare_instance(const Instance& base, const RunConfig& cfg) {
  Instance inst = base;
  const int k = std::min(cfg.colony.candidate_k, inst.size() - 1);
  if (k != inst.candidate_count()) inst.set_candidate_count(k);
  if (inst.size() <= Instance::kMaxCachedSize && !inst.distance_cached()) inst.enable_distance_cache();
  return inst;
}

inline DynamicsConfig prepare_dynamics(const Instance& inst, DynamicsConfig d) {
  if (d.enabled && d.rad <= 0.0) d.rad = compute_rad(inst);
  d.validate();
  return d;
}

inline ColonyParams worker_params(const RunConfig& cfg, int worker) {
  ColonyParams p = cfg.colony;
  p.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(worker));
  return p;
}

inline std::string log_stem(const Instance& inst, const RunConfig& cfg) {
  return inst.name() + "-" + mode_label(cfg) + "-w" + std::to_string(cfg.workers) + "-s" +
         std::to_string(cfg.seed);
}

class RunClock {
 public:
  double now() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

 private:
  Clock::time_point start_ = Clock::now();
};

inline bool budget_exhausted(const Budget& b, std::int64_t iteration, double elapsed) {
  if (b.iterations && iteration >= *b.iterations) return true;
  return b.seconds && elapsed >= *b.seconds;
}

struct Terminated {};

struct Shared {
  explicit Shared(const RunConfig& cfg, const Instance& inst)
      : cfg(cfg), log(cfg.log_dir, log_stem(inst, cfg)) {
    const auto latency = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double, std::milli>(cfg.latency_ms));
    for (int w = 0; w < cfg.workers; ++w) {
      to_master.push_back(std::make_unique<Channel<Message>>(latency));
      to_slave.push_back(std::make_unique<Channel<Message>>(latency));
    }
    worker_iterations.assign(static_cast<std::size_t>(cfg.workers), 0);
  }

  void abort(const std::string& why) {
    for (auto& c : to_master) c->close(why);
    for (auto& c : to_slave) c->close(why);
  }

  Clock::time_point deadline() const {
    const double s = cfg.loss_rate > 0.0 ? cfg.loss_timeout_s : cfg.exchange_timeout_s;
    return Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(s));
  }

  const RunConfig& cfg;
  RunClock clock;
  EventLog log;
  std::vector<std::unique_ptr<Channel<Message>>> to_master;  // index = slave id
  std::vector<std::unique_ptr<Channel<Message>>> to_slave;
  std::vector<std::int64_t> worker_iterations;
  std::mutex records_mu;
  std::vector<ExchangeRecord> records;
  std::atomic<std::int64_t> lost{0};
};

class MasterWorker {
 public:
  MasterWorker(Shared& sh, Instance inst, DynamicsConfig dyn)
      : sh_(sh), cfg_(sh.cfg), inst_(std::move(inst)), colony_(inst_, worker_params(cfg_, 0)), stream_(dyn),
        loss_rng_(derive_seed(cfg_.seed, 1u << 20)) {
    pool_.insert(colony_.best_so_far().order, colony_.best_so_far().length, 0.0, 0);
  }

  void run() {
    const int slaves = cfg_.workers - 1;
    for (;; ++it_) {
      if (budget_exhausted(cfg_.budget, it_, sh_.clock.now())) break;
      if (stream_.config().enabled && it_ % cfg_.interval_mod() == 0) cycle_step();
      if (colony_.run_iteration().improved) offer_own_best();
      if (slaves > 0 && (it_ + 1) % cfg_.interval_update() == 0) {
        if (cfg_.exchange == ExchangeMode::sr) {
          exchange_sr();
        } else {
          exchange_gs();
        }
      }
      sh_.worker_iterations[0] = it_ + 1;
    }
    sh_.worker_iterations[0] = it_;
    terminate_and_collect();
  }

  /// Cycle start: move one city, broadcast it, restore the pool.
  void cycle_step() {
    const CityMove move = stream_.next(inst_, it_ / cfg_.interval_mod());
    colony_.on_instance_changed();
    for (int s = 1; s < cfg_.workers; ++s) sh_.to_slave[static_cast<std::size_t>(s)]->send(MoveBroadcast{move});
    pool_.restore(inst_);
    moves_.push_back(move);
    sh_.log.move(move);
    sh_.log.event(sh_.clock.now(), 0, "move", format_move(move));
  }

  /// Point-to-point round, slave by slave in id order.
  void exchange_sr() {
    for (int s = 1; s < cfg_.workers; ++s) {
      auto report = await_report(s);
      if (!report) continue;
      accept_report(*report);
      pool_.restore(inst_);
      send_pool_best(s, /*lossy=*/true);
    }
  }

  /// Collective round: barrier, gather every report, one batch update, scatter.
  void exchange_gs() {
    for (int s = 1; s < cfg_.workers; ++s) await_barrier(s);
    for (int s = 1; s < cfg_.workers; ++s) sh_.to_slave[static_cast<std::size_t>(s)]->send(BarrierSignal{it_});
    std::vector<BestReport> batch;
    for (int s = 1; s < cfg_.workers; ++s) {
      auto report = await_report(s);
      if (!report) throw RunAborted("gather timed out waiting for worker " + std::to_string(s));
      batch.push_back(std::move(*report));
    }
    for (const BestReport& r : batch) accept_report(r);
    pool_.restore(inst_);
    for (int s = 1; s < cfg_.workers; ++s) send_pool_best(s, /*lossy=*/false);
  }

  const SolutionPool& pool() const { return pool_; }
  const std::vector<CityMove>& moves() const { return moves_; }
  std::int64_t iterations() const { return it_; }

 private:
  void offer_own_best() {
    const Tour& b = colony_.best_so_far();
    if (pool_.insert(b.order, b.length, sh_.clock.now(), 0))
      sh_.log.event(sh_.clock.now(), 0, "pool_insert", tour_payload(b.order, b.length));
  }

  void accept_report(const BestReport& r) {
    // Reports are re-evaluated here; a stale report may predate a move.
    const Length len = tour_length(inst_, r.order);
    pool_.insert(r.order, len, r.found_at, r.worker);
    sh_.log.event(sh_.clock.now(), 0, r.final ? "final_report" : "report",
                  std::to_string(r.worker) + ":" + tour_payload(r.order, len));
  }

  void send_pool_best(int s, bool lossy) {
    const PoolEntry& head = pool_.head();
    if (lossy && drop()) {
      sh_.log.event(sh_.clock.now(), 0, "lost_pool_best", std::to_string(s));
      return;
    }
    sh_.to_slave[static_cast<std::size_t>(s)]->send(
        PoolBest{head.order, head.length, it_ / cfg_.interval_mod(), it_});
    sh_.log.event(sh_.clock.now(), 0, "pool_best", std::to_string(s) + ":" + tour_payload(head.order, head.length));
  }

  bool drop() {
    if (cfg_.loss_rate <= 0.0) return false;
    if (std::uniform_real_distribution<double>(0.0, 1.0)(loss_rng_) >= cfg_.loss_rate) return false;
    ++sh_.lost;
    return true;
  }

  // Waits for slave s's report of the current round; older reports (left
  // over from timed-out rounds) are still pooled.
  std::optional<BestReport> await_report(int s) {
    auto& ch = *sh_.to_master[static_cast<std::size_t>(s)];
    const auto deadline = sh_.deadline();
    for (;;) {
      auto msg = ch.receive_until(deadline);
      if (!msg) {
        if (cfg_.loss_rate > 0.0) return std::nullopt;
        throw RunAborted("timed out waiting for worker " + std::to_string(s) + " at iteration " +
                         std::to_string(it_));
      }
      if (auto* r = std::get_if<BestReport>(&*msg)) {
        if (r->iteration == it_) return std::move(*r);
        accept_report(*r);
        continue;
      }
      throw RunAborted("unexpected message from worker " + std::to_string(s));
    }
  }

  void await_barrier(int s) {
    auto msg = sh_.to_master[static_cast<std::size_t>(s)]->receive_until(sh_.deadline());
    if (!msg) throw RunAborted("barrier timeout waiting for worker " + std::to_string(s));
    const auto* b = std::get_if<BarrierSignal>(&*msg);
    if (!b || b->iteration != it_) throw RunAborted("barrier protocol violation by worker " + std::to_string(s));
  }

  void terminate_and_collect() {
    for (int s = 1; s < cfg_.workers; ++s) sh_.to_slave[static_cast<std::size_t>(s)]->send(Terminate{});
    sh_.log.event(sh_.clock.now(), 0, "terminate", "");
    const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                             std::chrono::duration<double>(cfg_.exchange_timeout_s));
    for (int s = 1; s < cfg_.workers; ++s) {
      for (;;) {
        auto msg = sh_.to_master[static_cast<std::size_t>(s)]->receive_until(deadline);
        if (!msg) throw RunAborted("worker " + std::to_string(s) + " did not acknowledge termination");
        if (auto* r = std::get_if<BestReport>(&*msg)) {
          accept_report(*r);
          if (r->final) break;
        }
        // Barrier arrivals left over from a round the master never reached.
      }
    }
    pool_.restore(inst_);
  }

  Shared& sh_;
  const RunConfig& cfg_;
  Instance inst_;
  Colony colony_;
  SolutionPool pool_;
  MoveStream stream_;
  Rng loss_rng_;
  std::vector<CityMove> moves_;
  std::int64_t it_ = 0;
};

class SlaveWorker {
 public:
  SlaveWorker(Shared& sh, int id, Instance inst)
      : sh_(sh), cfg_(sh.cfg), id_(id), inst_(std::move(inst)), colony_(inst_, worker_params(cfg_, id)),
        loss_rng_(derive_seed(cfg_.seed, (1u << 20) + static_cast<unsigned>(id))) {}

  void run() {
    const bool dynamic = cfg_.dynamics.enabled;
    try {
      for (;; ++it_) {
        if (cfg_.budget.iterations && it_ >= *cfg_.budget.iterations) {
          sh_.worker_iterations[static_cast<std::size_t>(id_)] = it_;
          await([](const Message&) { return false; });
        }
        if (!cfg_.budget.iterations) poll();
        if (dynamic && it_ % cfg_.interval_mod() == 0) {
          const std::int64_t cycle = it_ / cfg_.interval_mod();
          Message m = await([&](const Message& x) {
            const auto* b = std::get_if<MoveBroadcast>(&x);
            return b && b->move.cycle == cycle;
          });
          apply_move(inst_, std::get<MoveBroadcast>(m).move);
          colony_.on_instance_changed();
        }
        const Length before = colony_.best_so_far().length;
        colony_.run_iteration();
        if (colony_.best_so_far().length < before) found_at_ = sh_.clock.now();
        if ((it_ + 1) % cfg_.interval_update() == 0) exchange();
        sh_.worker_iterations[static_cast<std::size_t>(id_)] = it_ + 1;
      }
    } catch (const Terminated&) {
    }
    const Tour& b = colony_.best_so_far();
    sh_.to_master[static_cast<std::size_t>(id_)]->send(BestReport{b.order, b.length, id_, it_, found_at_, true});
  }

 private:
  bool terminate_allowed() const {
    return !cfg_.budget.iterations || it_ >= *cfg_.budget.iterations;
  }

  // Terminate interrupts waits only when this worker's own budget allows.
  template <typename Pred>
  Message await(Pred pred, std::optional<Clock::time_point> deadline = std::nullopt) {
    for (auto p = pending_.begin(); p != pending_.end(); ++p) {
      if (std::holds_alternative<Terminate>(*p) && terminate_allowed()) throw Terminated{};
      if (pred(*p)) {
        Message m = std::move(*p);
        pending_.erase(p);
        return m;
      }
    }
    auto& ch = *sh_.to_slave[static_cast<std::size_t>(id_)];
    for (;;) {
      auto msg = ch.receive_until(deadline.value_or(Clock::now() + std::chrono::hours(24 * 365)));
      if (!msg) throw Timeout{};
      if (std::holds_alternative<Terminate>(*msg) && terminate_allowed()) throw Terminated{};
      if (pred(*msg)) return std::move(*msg);
      pending_.push_back(std::move(*msg));
    }
  }

  void poll() {
    auto& ch = *sh_.to_slave[static_cast<std::size_t>(id_)];
    while (auto msg = ch.try_receive()) {
      if (std::holds_alternative<Terminate>(*msg)) throw Terminated{};
      pending_.push_back(std::move(*msg));
    }
    for (const Message& m : pending_)
      if (std::holds_alternative<Terminate>(m)) throw Terminated{};
  }

  bool drop() {
    if (cfg_.loss_rate <= 0.0) return false;
    if (std::uniform_real_distribution<double>(0.0, 1.0)(loss_rng_) >= cfg_.loss_rate) return false;
    ++sh_.lost;
    return true;
  }

  void exchange() {
    colony_.clear_copy_ant();
    const Tour& b = colony_.best_so_far();
    const auto deadline = sh_.deadline();
    if (cfg_.exchange == ExchangeMode::gs) {
      sh_.to_master[static_cast<std::size_t>(id_)]->send(BarrierSignal{it_});
      try {
        await([&](const Message& x) {
          const auto* s = std::get_if<BarrierSignal>(&x);
          return s && s->iteration == it_;
        }, deadline);
      } catch (const Timeout&) {
        throw RunAborted("barrier timeout on worker " + std::to_string(id_));
      }
    }
    if (cfg_.exchange == ExchangeMode::gs || !drop()) {
      sh_.to_master[static_cast<std::size_t>(id_)]->send(BestReport{b.order, b.length, id_, it_, found_at_, false});
    }

    std::optional<PoolBest> reply;
    try {
      Message m = await([&](const Message& x) {
        const auto* p = std::get_if<PoolBest>(&x);
        return p && p->iteration == it_;
      }, deadline);
      reply = std::get<PoolBest>(std::move(m));
    } catch (const Timeout&) {
      if (cfg_.loss_rate <= 0.0) throw RunAborted("no pool reply for worker " + std::to_string(id_));
    }
    // Replies from earlier timed-out rounds are obsolete.
    std::erase_if(pending_, [&](const Message& x) {
      const auto* p = std::get_if<PoolBest>(&x);
      return p && p->iteration <= it_;
    });

    ExchangeRecord rec;
    rec.worker = id_;
    rec.iteration = it_;
    if (!reply) {
      rec.skipped = true;
    } else {
      rec.pool_head = reply->length;
      if (cfg_.adopt_if_better) {
        colony_.offer_best_so_far(reply->order);
      } else {
        colony_.adopt_best_so_far(reply->order);
        found_at_ = sh_.clock.now();
      }
      if (cfg_.copy_ant) {
        colony_.set_copy_ant(reply->order);
        rec.copy_ant = colony_.copy_ant()->length;
      }
      rec.adopted = colony_.best_so_far().length;
      rec.local_reeval = tour_length(inst_, reply->order);
      sh_.log.event(sh_.clock.now(), id_, "adopt", tour_payload(reply->order, rec.adopted));
    }
    std::lock_guard lock(sh_.records_mu);
    sh_.records.push_back(rec);
  }

  struct Timeout {};

  Shared& sh_;
  const RunConfig& cfg_;
  int id_;
  Instance inst_;
  Colony colony_;
  Rng loss_rng_;
  std::vector<Message> pending_;
  std::int64_t it_ = 0;
  double found_at_ = 0.0;
};

inline RunReport make_report(const Instance& inst, const RunConfig& cfg) {
  RunReport r;
  r.instance = inst.name();
  r.mode = mode_label(cfg);
  r.workers = cfg.workers;
  r.copy_ant = cfg.copy_ant;
  r.seed = cfg.seed;
  r.optimum = cfg.optimum;
  return r;
}

}  // namespace detail

/// One colony, no messages; the pool collects improving best-so-far tours.
inline RunReport run_serial(const Instance& base, RunConfig cfg) {
  cfg.workers = 1;
  cfg.validate();
  Instance inst = detail::prepare_instance(base, cfg);
  const DynamicsConfig dyn = detail::prepare_dynamics(inst, cfg.dynamics);
  detail::RunClock clock;
  detail::EventLog log(cfg.log_dir, detail::log_stem(inst, cfg));
  Colony colony(inst, detail::worker_params(cfg, 0));
  MoveStream stream(dyn);
  SolutionPool pool;
  pool.insert(colony.best_so_far().order, colony.best_so_far().length, 0.0, 0);

  RunReport report = detail::make_report(inst, cfg);
  std::int64_t it = 0;
  for (;; ++it) {
    if (detail::budget_exhausted(cfg.budget, it, clock.now())) break;
    if (dyn.enabled && it % cfg.interval_mod() == 0) {
      const CityMove move = stream.next(inst, it / cfg.interval_mod());
      colony.on_instance_changed();
      pool.restore(inst);
      report.moves.push_back(move);
      log.move(move);
      log.event(clock.now(), 0, "move", format_move(move));
    }
    if (colony.run_iteration().improved) {
      const Tour& b = colony.best_so_far();
      pool.insert(b.order, b.length, clock.now(), 0);
    }
  }
  pool.restore(inst);
  report.pool = pool.entries();
  report.worker_iterations = {it};
  report.iterations_total = it;
  report.wall_seconds = clock.now();
  compute_statistics(report);
  return report;
}

/// Master (worker 0) plus workers-1 slaves, each on its own thread with a
/// private instance copy and colony stream.
inline RunReport run_parallel(const Instance& base, RunConfig cfg) {
  cfg.validate();
  if (cfg.workers < 2) throw std::invalid_argument("parallel run needs at least 2 workers");
  const Instance inst = detail::prepare_instance(base, cfg);
  const DynamicsConfig dyn = detail::prepare_dynamics(inst, cfg.dynamics);
  cfg.dynamics = dyn;

  detail::Shared sh(cfg, inst);
  detail::MasterWorker master(sh, inst, dyn);
  std::vector<std::unique_ptr<detail::SlaveWorker>> slaves;
  for (int s = 1; s < cfg.workers; ++s) slaves.push_back(std::make_unique<detail::SlaveWorker>(sh, s, inst));

  std::mutex err_mu;
  std::string first_error;
  auto guarded = [&](int worker, auto&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      {
        std::lock_guard lock(err_mu);
        if (first_error.empty()) first_error = "worker " + std::to_string(worker) + ": " + e.what();
      }
      sh.abort(e.what());
    }
  };
  {
    std::vector<std::jthread> threads;
    threads.emplace_back([&] { guarded(0, [&] { master.run(); }); });
    for (int s = 1; s < cfg.workers; ++s) {
      threads.emplace_back([&, s] { guarded(s, [&] { slaves[static_cast<std::size_t>(s - 1)]->run(); }); });
    }
  }
  if (!first_error.empty()) throw RunAborted("parallel run aborted: " + first_error);

  RunReport report = detail::make_report(inst, cfg);
  report.pool = master.pool().entries();
  report.moves = master.moves();
  report.worker_iterations = sh.worker_iterations;
  report.iterations_total = master.iterations();
  report.exchanges = std::move(sh.records);
  std::stable_sort(report.exchanges.begin(), report.exchanges.end(),
                   [](const ExchangeRecord& a, const ExchangeRecord& b) {
                     return std::pair(a.iteration, a.worker) < std::pair(b.iteration, b.worker);
                   });
  report.messages_lost = sh.lost.load();
  report.wall_seconds = sh.clock.now();
  compute_statistics(report);
  return report;
}

inline RunReport run(const Instance& inst, const RunConfig& cfg) {
  return cfg.workers == 1 ? run_serial(inst, cfg) : run_parallel(inst, cfg);
}

}  // namespace pacorn
