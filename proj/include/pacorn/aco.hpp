#pragma once

// Ant System / MAX-MIN Ant System: pheromone trails, probabilistic tour
// construction and the per-iteration engine.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pacorn/errors.hpp"
#include "pacorn/instance.hpp"
#include "pacorn/local_search.hpp"

namespace pacorn {

using Rng = std::mt19937_64;

enum class PheromoneMode { as, mmas };

/// Which tour reinforces the trails in MMAS mode.
enum class DepositRule {
  iteration_best,
  best_so_far,
  schedule,  // iteration-best, best-so-far every bs_period-th iteration
};

struct ColonyParams {
  PheromoneMode mode = PheromoneMode::mmas;
  double alpha = 1.0;
  double beta = 5.0;
  double rho = 0.2;
  int ants = 50;
  int candidate_k = kDefaultCandidates;
  LocalSearchKind local_search = LocalSearchKind::three_opt;
  bool local_search_all_ants = true;
  DepositRule deposit_rule = DepositRule::schedule;
  int bs_period = 25;
  int restart_threshold = 250;
  double tau_min_divisor = 2.0;  // tau_min = tau_max / (divisor * n)
  std::uint64_t seed = 1;

  void validate() const {
    if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in (0, 1]");
    if (ants < 1) throw std::invalid_argument("need at least one ant");
    if (alpha < 0.0 || beta < 0.0) throw std::invalid_argument("alpha and beta must be nonnegative");
    if (candidate_k < 1) throw std::invalid_argument("candidate_k must be positive");
    if (local_search != LocalSearchKind::none && candidate_k < 2)
      throw std::invalid_argument("local search needs candidate_k >= 2");
    if (bs_period < 1) throw std::invalid_argument("bs_period must be positive");
    if (restart_threshold < 1) throw std::invalid_argument("restart_threshold must be positive");
    if (!(tau_min_divisor > 0.0)) throw std::invalid_argument("tau_min_divisor must be positive");
  }
};

// ---------------------------------------------------------------------------

struct TrailLimits {
  double tau_max = 0.0;
  double tau_min = 0.0;
};

inline TrailLimits compute_trail_limits(double rho, Length best_length, int n, double tau_min_divisor = 2.0) {
  if (best_length <= 0) throw std::invalid_argument("best-so-far length must be positive");
  if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in (0, 1]");
  if (n < 3) throw std::invalid_argument("need n >= 3");
  const double tau_max = 1.0 / (rho * static_cast<double>(best_length));
  return {tau_max, tau_max / (tau_min_divisor * n)};
}

/// Symmetric trail matrix; only the strict lower triangle is stored, so
/// tau(i, j) == tau(j, i) holds structurally.
class PheromoneMatrix {
 public:
  PheromoneMatrix(int n, PheromoneMode mode, double initial)
      : n_(n), mode_(mode), tau_(static_cast<std::size_t>(n) * (n - 1) / 2, initial) {}

  int size() const { return n_; }
  PheromoneMode mode() const { return mode_; }

  double operator()(City i, City j) const { return tau_[index(i, j)]; }
  void set(City i, City j, double v) { tau_[index(i, j)] = v; }
  void add(City i, City j, double v) { tau_[index(i, j)] += v; }
  void fill(double v) { std::fill(tau_.begin(), tau_.end(), v); }

  TrailLimits limits() const { return limits_; }
  void set_limits(TrailLimits l) { limits_ = l; }

  std::span<const double> values() const { return tau_; }
  std::span<double> values() { return tau_; }

  double min_value() const { return *std::min_element(tau_.begin(), tau_.end()); }
  double max_value() const { return *std::max_element(tau_.begin(), tau_.end()); }

 private:
  static std::size_t index(City i, City j) {
    if (i < j) std::swap(i, j);
    return static_cast<std::size_t>(i) * (i - 1) / 2 + static_cast<std::size_t>(j);
  }

  int n_;
  PheromoneMode mode_;
  std::vector<double> tau_;
  TrailLimits limits_{};
};

inline void evaporate(PheromoneMatrix& pher, double rho) {
  const double keep = 1.0 - rho;
  for (double& t : pher.values()) t *= keep;
}

/// AS mode adds rho/L to every edge of `tour`, MMAS mode adds 1/L.
inline void deposit(PheromoneMatrix& pher, const Tour& tour, double rho) {
  if (tour.length <= 0) throw std::invalid_argument("cannot deposit for a tour of length <= 0");
  const double amount = (pher.mode() == PheromoneMode::as ? rho : 1.0) / static_cast<double>(tour.length);
  const auto& o = tour.order;
  for (std::size_t i = 0; i + 1 < o.size(); ++i) pher.add(o[i], o[i + 1], amount);
  pher.add(o.back(), o.front(), amount);
}

/// MMAS only; a no-op in AS mode.
inline void clamp_trails(PheromoneMatrix& pher) {
  if (pher.mode() != PheromoneMode::mmas) return;
  const auto [hi, lo] = pher.limits();
  for (double& t : pher.values()) t = std::min(hi, std::max(lo, t));
}

// ---------------------------------------------------------------------------
// Construction

namespace detail {

inline double power(double base, double exponent) {
  if (exponent == 0.0) return 1.0;
  if (exponent == 1.0) return base;
  if (exponent > 0.0 && exponent <= 16.0 && exponent == std::floor(exponent)) {
    auto e = static_cast<unsigned>(exponent);
    double result = 1.0;
    while (e) {
      if (e & 1u) result *= base;
      base *= base;
      e >>= 1u;
    }
    return result;
  }
  return std::pow(base, exponent);
}

}  // namespace detail

inline double heuristic(Length d) { return 1.0 / static_cast<double>(std::max<Length>(d, 1)); }

/// Unnormalised selection weight tau^alpha * eta^beta of edge (i, j).
inline double choice_weight(const Instance& inst, const PheromoneMatrix& pher, const ColonyParams& p, City i,
                            City j) {
  return detail::power(pher(i, j), p.alpha) * detail::power(heuristic(inst.distance(i, j)), p.beta);
}

class AntState {
 public:
  explicit AntState(int n) : visited_(static_cast<std::size_t>(n), 0) { partial_.reserve(static_cast<std::size_t>(n)); }

  void visit(City c) {
    visited_[static_cast<std::size_t>(c)] = 1;
    partial_.push_back(c);
  }
  City current() const { return partial_.back(); }
  bool visited(City c) const { return visited_[static_cast<std::size_t>(c)] != 0; }
  bool complete() const { return partial_.size() == visited_.size(); }
  const std::vector<City>& partial() const { return partial_; }
  std::vector<City> take_order() { return std::move(partial_); }

 private:
  std::vector<char> visited_;
  std::vector<City> partial_;
};

/// Weights of every (city, candidate rank) pair for one pheromone state.
/// Values are exactly those of `choice_weight`.
class CandidateWeights {
 public:
  void rebuild(const Instance& inst, const PheromoneMatrix& pher, const ColonyParams& p) {
    k_ = static_cast<std::size_t>(std::min(p.candidate_k, inst.candidate_count()));
    w_.resize(static_cast<std::size_t>(inst.size()) * k_);
    for (City i = 0; i < inst.size(); ++i) {
      const auto cand = inst.neighbors(i);
      for (std::size_t r = 0; r < k_; ++r) w_[static_cast<std::size_t>(i) * k_ + r] = choice_weight(inst, pher, p, i, cand[r]);
    }
  }
  std::size_t width() const { return k_; }
  double at(City i, std::size_t rank) const { return w_[static_cast<std::size_t>(i) * k_ + rank]; }

 private:
  std::size_t k_ = 0;
  std::vector<double> w_;
};

namespace detail {

template <typename WeightOf>
City choose_next_with(const AntState& ant, const Instance& inst, const PheromoneMatrix& pher, const ColonyParams& p,
                      Rng& rng, WeightOf weight_of) {
  if (ant.partial().empty()) throw IllegalState("ant has no start city");
  if (ant.complete()) throw IllegalState("no unvisited city left");
  const City i = ant.current();
  const auto cand = inst.neighbors(i);
  const std::size_t k = std::min<std::size_t>(cand.size(), static_cast<std::size_t>(p.candidate_k));

  std::array<double, 64> small{};
  std::vector<double> large;
  double* w = small.data();
  if (k > small.size()) {
    large.resize(k);
    w = large.data();
  }
  double total = 0.0;
  bool any = false;
  for (std::size_t r = 0; r < k; ++r) {
    const City j = cand[r];
    if (ant.visited(j)) {
      w[r] = 0.0;
      continue;
    }
    any = true;
    w[r] = weight_of(i, r);
    total += w[r];
  }
  if (any && total > 0.0) {
    std::uniform_real_distribution<double> unif(0.0, total);
    const double target = unif(rng);
    double acc = 0.0;
    City last = -1;
    for (std::size_t r = 0; r < k; ++r) {
      if (ant.visited(cand[r])) continue;
      acc += w[r];
      last = cand[r];
      if (target < acc) return cand[r];
    }
    return last;
  }

  City best = -1;
  double best_w = -1.0;
  for (City j = 0; j < inst.size(); ++j) {
    if (ant.visited(j)) continue;
    const double wj = choice_weight(inst, pher, p, i, j);
    if (wj > best_w) {
      best_w = wj;
      best = j;
    }
  }
  return best;
}

}  // namespace detail

/// Samples the next city among unvisited candidates proportionally to their
/// weights; with no unvisited candidate, returns the unvisited city of
/// maximal weight (lowest index on ties).
inline City choose_next(const AntState& ant, const Instance& inst, const PheromoneMatrix& pher,
                        const ColonyParams& p, Rng& rng) {
  return detail::choose_next_with(ant, inst, pher, p, rng, [&](City i, std::size_t r) {
    return choice_weight(inst, pher, p, i, inst.neighbors(i)[r]);
  });
}

/// Same draw as above, reading candidate weights from a prepared table.
inline City choose_next(const AntState& ant, const Instance& inst, const PheromoneMatrix& pher,
                        const ColonyParams& p, Rng& rng, const CandidateWeights& table) {
  return detail::choose_next_with(ant, inst, pher, p, rng, [&](City i, std::size_t r) { return table.at(i, r); });
}

inline Tour construct_tour(const Instance& inst, const PheromoneMatrix& pher, const ColonyParams& p, Rng& rng,
                           const CandidateWeights* table = nullptr) {
  const int n = inst.size();
  AntState ant(n);
  std::uniform_int_distribution<City> start(0, n - 1);
  ant.visit(start(rng));
  while (!ant.complete()) ant.visit(table ? choose_next(ant, inst, pher, p, rng, *table) : choose_next(ant, inst, pher, p, rng));
  std::vector<City> order = ant.take_order();
  const Length len = tour_length_unchecked(inst, order);
  return Tour{std::move(order), len};
}

/// Greedy nearest-neighbour tour from `start` (lowest index on ties).
inline Tour nearest_neighbor_tour(const Instance& inst, City start = 0) {
  const int n = inst.size();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<City> order{start};
  seen[static_cast<std::size_t>(start)] = 1;
  for (int step = 1; step < n; ++step) {
    const City cur = order.back();
    City best = -1;
    Length best_d = std::numeric_limits<Length>::max();
    for (City j : inst.neighbors(cur)) {
      if (!seen[static_cast<std::size_t>(j)]) {
        best = j;
        best_d = inst.distance(cur, j);
        break;
      }
    }
    if (best < 0) {
      for (City j = 0; j < n; ++j) {
        if (seen[static_cast<std::size_t>(j)]) continue;
        const Length dj = inst.distance(cur, j);
        if (dj < best_d) {
          best_d = dj;
          best = j;
        }
      }
    }
    seen[static_cast<std::size_t>(best)] = 1;
    order.push_back(best);
  }
  const Length len = tour_length_unchecked(inst, order);
  return Tour{std::move(order), len};
}

// ---------------------------------------------------------------------------
// Engine

struct IterationReport {
  std::int64_t iteration = 0;  // 1-based
  Length iteration_best = 0;
  Length best_so_far = 0;
  bool improved = false;
  bool restarted = false;
  double seconds = 0.0;
};

/// One ant colony bound to an instance it does not own. Callers that move
/// cities must call `on_instance_changed()` before the next iteration.
class Colony {
 public:
  Colony(const Instance& inst, ColonyParams params) : inst_(&inst), params_(params), rng_(params.seed),
        pher_(inst.size(), params.mode, 0.0) {
    params_.validate();
    params_.candidate_k = std::min(params_.candidate_k, inst.candidate_count());
    ls_.kind = params_.local_search;
    ls_.candidate_k = params_.candidate_k;

    best_ = nearest_neighbor_tour(inst);
    restart_best_ = best_;
    if (params_.mode == PheromoneMode::mmas) {
      pher_.set_limits(compute_trail_limits(params_.rho, best_.length, inst.size(), params_.tau_min_divisor));
      pher_.fill(pher_.limits().tau_max);
    } else {
      pher_.fill(static_cast<double>(params_.ants) / static_cast<double>(best_.length));
    }
  }

  const Instance& instance() const { return *inst_; }
  const ColonyParams& params() const { return params_; }
  const PheromoneMatrix& pheromone() const { return pher_; }
  PheromoneMatrix& pheromone() { return pher_; }
  Rng& rng() { return rng_; }

  const Tour& best_so_far() const { return best_; }
  const Tour& restart_best() const { return restart_best_; }
  const std::optional<Tour>& iteration_best() const { return iteration_best_; }
  const std::vector<Tour>& last_tours() const { return tours_; }
  std::int64_t iterations() const { return iteration_; }
  int stagnation() const { return stagnation_; }
  void set_stagnation(int s) { stagnation_ = s; }

  /// The ant whose tour reinforces the trails in the current iteration.
  const Tour& select_deposit_ant() const {
    if (iteration_ < 1 || !iteration_best_) throw IllegalState("no iteration completed yet");
    if (copy_ant_) return *copy_ant_;
    switch (params_.deposit_rule) {
      case DepositRule::iteration_best:
        return *iteration_best_;
      case DepositRule::best_so_far:
        return best_;
      case DepositRule::schedule:
        break;
    }
    return iteration_ % params_.bs_period == 0 ? best_ : *iteration_best_;
  }

  IterationReport run_iteration() {
    const auto t0 = std::chrono::steady_clock::now();
    ++iteration_;
    const auto& inst = *inst_;

    tours_.clear();
    weights_.rebuild(inst, pher_, params_);
    for (int a = 0; a < params_.ants; ++a) {
      Tour t = construct_tour(inst, pher_, params_, rng_, &weights_);
      if (params_.local_search_all_ants) t = local_search(inst, std::move(t), ls_);
      tours_.push_back(std::move(t));
    }
    std::size_t ib = 0;
    for (std::size_t a = 1; a < tours_.size(); ++a)
      if (tours_[a].length < tours_[ib].length) ib = a;
    if (!params_.local_search_all_ants) tours_[ib] = local_search(inst, std::move(tours_[ib]), ls_);
    iteration_best_ = tours_[ib];

    IterationReport rep;
    rep.iteration = iteration_;
    rep.iteration_best = iteration_best_->length;
    if (iteration_best_->length < best_.length) {
      best_ = *iteration_best_;
      stagnation_ = 0;
      rep.improved = true;
    } else {
      ++stagnation_;
    }
    if (iteration_best_->length < restart_best_.length) restart_best_ = *iteration_best_;
    if (copy_ant_ && best_.length < copy_ant_->length) copy_ant_ = best_;

    evaporate(pher_, params_.rho);
    if (params_.mode == PheromoneMode::as) {
      for (const Tour& t : tours_) deposit(pher_, t, params_.rho);
    } else {
      deposit(pher_, select_deposit_ant(), params_.rho);
      if (rep.improved) pher_.set_limits(compute_trail_limits(params_.rho, best_.length, inst.size(), params_.tau_min_divisor));
      clamp_trails(pher_);
      rep.restarted = detect_stagnation_and_restart();
    }

    rep.best_so_far = best_.length;
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
  }

  /// MMAS restart: trails back to tau_max once `restart_threshold`
  /// iterations pass without a best-so-far improvement.
  bool detect_stagnation_and_restart() {
    if (params_.mode != PheromoneMode::mmas) return false;
    if (stagnation_ < params_.restart_threshold) return false;
    pher_.fill(pher_.limits().tau_max);
    restart_best_ = best_;
    stagnation_ = 0;
    return true;
  }

  /// Re-evaluates stored tours after a city move and refreshes trail limits.
  void on_instance_changed() {
    reevaluate(best_);
    reevaluate(restart_best_);
    if (iteration_best_) reevaluate(*iteration_best_);
    if (copy_ant_) reevaluate(*copy_ant_);
    refresh_limits();
  }

  /// Replaces best-so-far unconditionally (the tour is re-evaluated here).
  void adopt_best_so_far(std::vector<City> order) {
    best_ = make_tour(*inst_, std::move(order));
    refresh_limits();
  }

  /// Replaces best-so-far only when `order` is strictly shorter here.
  bool offer_best_so_far(std::vector<City> order) {
    Tour t = make_tour(*inst_, std::move(order));
    if (t.length >= best_.length) return false;
    best_ = std::move(t);
    refresh_limits();
    return true;
  }

  void set_copy_ant(std::vector<City> order) {
    copy_ant_ = make_tour(*inst_, std::move(order));
    if (best_.length < copy_ant_->length) copy_ant_ = best_;
  }
  void clear_copy_ant() { copy_ant_.reset(); }
  const std::optional<Tour>& copy_ant() const { return copy_ant_; }

 private:
  void reevaluate(Tour& t) const { t.length = tour_length_unchecked(*inst_, t.order); }

  void refresh_limits() {
    if (params_.mode != PheromoneMode::mmas) return;
    pher_.set_limits(compute_trail_limits(params_.rho, best_.length, inst_->size(), params_.tau_min_divisor));
    clamp_trails(pher_);
  }

  const Instance* inst_;
  ColonyParams params_;
  LocalSearchConfig ls_;
  Rng rng_;
  PheromoneMatrix pher_;
  CandidateWeights weights_;
  Tour best_;
  Tour restart_best_;
  std::optional<Tour> iteration_best_;
  std::optional<Tour> copy_ant_;
  std::vector<Tour> tours_;
  std::int64_t iteration_ = 0;
  int stagnation_ = 0;
};

}  // namespace pacorn
