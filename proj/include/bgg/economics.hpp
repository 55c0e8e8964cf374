// SPDX-License-Identifier: Apache-2.0
//
// Two-strategy cost model and the reserve-configuration search.
//
//              NotBurst (1-q)   Burst (q)
//   Regular         0               V
//   Safety          c             c + V
//
// with c = c_(n,rho) the price of holding the reserve.
#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bgg/estimators.hpp"
#include "bgg/game.hpp"
#include "bgg/oracle.hpp"

namespace bgg {

enum class ReservePricing {
  per_node,               ///< c = c_b * n
  expected_availability,  ///< c = c_b * n * rho
};

inline std::string_view to_string(ReservePricing p) {
  return p == ReservePricing::per_node ? "per_node" : "expected_availability";
}

struct CostParams {
  double unit_safety_cost = 0.0;  ///< c_b
  double burst_loss = 0.0;        ///< V
  ReservePricing pricing = ReservePricing::per_node;

  friend bool operator==(const CostParams&, const CostParams&) = default;
};

inline void validate(const CostParams& c) {
  if (!detail::finite_nonneg(c.unit_safety_cost))
    throw std::invalid_argument("unit_safety_cost must be finite and >= 0");
  if (!detail::finite_nonneg(c.burst_loss))
    throw std::invalid_argument("burst_loss must be finite and >= 0");
}

namespace detail {
inline void check_probability(double q, const char* name) {
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
}
}  // namespace detail

inline double reserve_cost(const ReservePolicy& policy, const CostParams& costs) {
  const double base = costs.unit_safety_cost * policy.reserve_count;
  return costs.pricing == ReservePricing::per_node ? base : base * policy.availability;
}

/// Rows {Regular, Safety}, columns {NotBurst, Burst}.
using CostMatrix = std::array<std::array<double, 2>, 2>;

inline CostMatrix cost_matrix(const CostParams& costs, const ReservePolicy& policy, double q) {
  detail::check_probability(q, "q");
  const double c = reserve_cost(policy, costs);
  const double v = costs.burst_loss;
  return {{{0.0, v}, {c, c + v}}};
}

/// Row expectation of the cost matrix: V q for Regular, c + V q for Safety.
inline double expected_cost(Mode strategy, const CostParams& costs, const ReservePolicy& policy,
                            double q) {
  detail::check_probability(q, "q");
  const auto m = cost_matrix(costs, policy, q);
  const auto& row = m[strategy == Mode::regular ? 0 : 1];
  return row[0] * (1.0 - q) + row[1] * q;
}

struct StrategyCosts {
  double regular_expected = 0.0;  ///< V q0
  double safety_expected = 0.0;   ///< c + V q1
  double total = 0.0;
  double reserve_cost = 0.0;
  double q0 = 0.0;
  double q1 = 0.0;
  double p_below = 0.0;
  int reserve_count = 0;
  double availability = 0.0;
};

/// Safety is reachable with probability p_below (the attacker is still below
/// the majority one observation before its exit); otherwise Regular applies.
inline StrategyCosts total_cost(const CostParams& costs, const ReservePolicy& policy, double q0,
                                double q1, double p_below) {
  detail::check_probability(q0, "q0");
  detail::check_probability(q1, "q1");
  detail::check_probability(p_below, "p_below");
  StrategyCosts s;
  s.reserve_cost = reserve_cost(policy, costs);
  s.q0 = q0;
  s.q1 = q1;
  s.p_below = p_below;
  s.reserve_count = policy.reserve_count;
  s.availability = policy.availability;
  s.regular_expected = expected_cost(Mode::regular, costs, policy, q0);
  s.safety_expected = expected_cost(Mode::safety, costs, policy, q1);
  const double c = s.reserve_cost, v = costs.burst_loss;
  s.total = (c * (1.0 - q1) + (c + v) * q1) * p_below + v * q0 * (1.0 - p_below);
  return s;
}

/// Reserve sizing bound n >= c / (V q0 - c). A reserve that costs nothing
/// is always admissible; otherwise V q0 must exceed c.
inline bool feasible(const ReservePolicy& policy, const CostParams& costs, double q0) {
  const double c = reserve_cost(policy, costs);
  if (c == 0.0) return true;
  const double margin = costs.burst_loss * q0 - c;
  if (margin <= 0.0) return false;
  return static_cast<double>(policy.reserve_count) >= c / margin;
}

struct SearchGrid {
  int n_max = 10;
  double rho_step = 0.05;

  /// step, 2 step, ..., 1 (1 appended when the step does not divide it).
  std::vector<double> rho_values() const {
    std::vector<double> out;
    const int k_max = static_cast<int>(std::floor(1.0 / rho_step + 1e-9));
    for (int k = 1; k <= k_max; ++k) out.push_back(std::round(k * rho_step * 1e12) / 1e12);
    if (out.empty() || out.back() < 1.0 - 1e-9) out.push_back(1.0);
    return out;
  }

  friend bool operator==(const SearchGrid&, const SearchGrid&) = default;
};

inline void validate(const SearchGrid& g) {
  if (g.n_max < 0) throw std::invalid_argument("n_max must be >= 0");
  if (!(g.rho_step > 0.0 && g.rho_step <= 1.0))
    throw std::invalid_argument("rho_step must lie in (0, 1]");
}

/// Probabilities a cost evaluation needs at one strategy/policy.
struct PointProbabilities {
  double q = 0.0;
  Interval ci;
  double p_below = 1.0;
  bool cap_warning = false;
};

/// Monte Carlo probabilities; every call shares the same path substreams.
class MonteCarloEvaluator {
 public:
  MonteCarloEvaluator(GameParams params, McConfig mc) : params_(params), mc_(mc) {}

  PointProbabilities regular() const {
    const auto e = estimate_burst_probability(params_, Mode::regular, std::nullopt, mc_);
    return {e.q_hat, e.ci, 1.0, e.cap_warning()};
  }

  PointProbabilities safety(const ReservePolicy& policy) const {
    const auto s = estimate_safety(params_, policy, mc_);
    // No observed pre-exit level: Safety is never preempted.
    const double p = s.pre_exit ? s.pre_exit->p_below : 1.0;
    return {s.burst.q_hat, s.burst.ci, p, s.burst.cap_warning()};
  }

 private:
  GameParams params_;
  McConfig mc_;
};

/// Exact probabilities from the dynamic-programming oracle.
class OracleEvaluator {
 public:
  explicit OracleEvaluator(GameParams params) : params_(params) {}

  PointProbabilities regular() const {
    const double q = oracle_burst_probability(params_, Mode::regular, std::nullopt).value;
    return {q, {q, q}, 1.0, false};
  }

  PointProbabilities safety(const ReservePolicy& policy) const {
    const double q = oracle_burst_probability(params_, Mode::safety, policy).value;
    double p = 1.0;
    try {
      p = oracle_pre_exit_distribution(params_, policy).p_below;
    } catch (const std::domain_error&) {
    }
    return {q, {q, q}, p, false};
  }

 private:
  GameParams params_;
};

struct SurfacePoint {
  int n = 0;
  double rho = 0.0;
  double q1 = 0.0;
  Interval q1_ci;
  double p_below = 1.0;
  StrategyCosts costs;
  Interval cost_range;       ///< total cost at the q0/q1 interval ends
  bool feasible = false;
  bool safety_preferred = false;  ///< V q0 >= c + V q1
};

struct FrontierPoint {
  int n = 0;
  double rho = 0.0;
};

struct OptimizationResult {
  double q0 = 0.0;
  Interval q0_ci;
  std::optional<FrontierPoint> best;
  double best_cost = 0.0;
  std::vector<SurfacePoint> surface;
  /// Per reserve count n >= 1, the smallest rho whose Safety cost does not
  /// exceed the Regular cost.
  std::vector<FrontierPoint> frontier;
  /// Lexicographic infimum (smallest n, then rho) of the frontier.
  std::optional<FrontierPoint> infimum;
  /// Feasible points whose cost interval overlaps the best one's.
  std::vector<FrontierPoint> indistinguishable;
  std::size_t infeasible_count = 0;
  bool cap_warning = false;

  bool ambiguous() const { return !indistinguishable.empty(); }
};

/// Grid search over (n, rho). q0 is evaluated once, q1 and p_below per
/// point; ties on cost go to the smaller n, then the smaller rho.
template <class Evaluator>
OptimizationResult optimize_with(const Evaluator& eval, const CostParams& costs,
                                 const SearchGrid& grid) {
  validate(costs);
  validate(grid);
  OptimizationResult r;
  const auto reg = eval.regular();
  r.q0 = reg.q;
  r.q0_ci = reg.ci;
  r.cap_warning = reg.cap_warning;

  const auto rhos = grid.rho_values();
  std::optional<std::size_t> best_idx;
  for (int n = 0; n <= grid.n_max; ++n) {
    std::optional<FrontierPoint> first_preferred;
    for (double rho : rhos) {
      const ReservePolicy policy{n, rho};
      const auto safe = eval.safety(policy);
      r.cap_warning = r.cap_warning || safe.cap_warning;
      SurfacePoint pt;
      pt.n = n;
      pt.rho = rho;
      pt.q1 = safe.q;
      pt.q1_ci = safe.ci;
      pt.p_below = safe.p_below;
      pt.costs = total_cost(costs, policy, r.q0, safe.q, safe.p_below);
      pt.cost_range = {
          total_cost(costs, policy, r.q0_ci.low, safe.ci.low, safe.p_below).total,
          total_cost(costs, policy, r.q0_ci.high, safe.ci.high, safe.p_below).total};
      pt.feasible = feasible(policy, costs, r.q0);
      pt.safety_preferred = pt.costs.regular_expected >= pt.costs.safety_expected;
      if (n >= 1 && pt.safety_preferred && !first_preferred) first_preferred = {n, rho};
      if (!pt.feasible) ++r.infeasible_count;
      r.surface.push_back(pt);
      if (pt.feasible && (!best_idx || pt.costs.total < r.surface[*best_idx].costs.total))
        best_idx = r.surface.size() - 1;
    }
    if (first_preferred) r.frontier.push_back(*first_preferred);
  }
  if (!r.frontier.empty()) r.infimum = r.frontier.front();
  if (best_idx) {
    const auto& b = r.surface[*best_idx];
    r.best = FrontierPoint{b.n, b.rho};
    r.best_cost = b.costs.total;
    for (std::size_t i = 0; i < r.surface.size(); ++i) {
      const auto& p = r.surface[i];
      if (i != *best_idx && p.feasible && p.cost_range.overlaps(b.cost_range))
        r.indistinguishable.push_back({p.n, p.rho});
    }
  }
  return r;
}

/// Monte Carlo search with common random numbers across the grid.
inline OptimizationResult optimize(const GameParams& params, const CostParams& costs,
                                   const SearchGrid& grid, const McConfig& mc) {
  validate(params);
  validate(mc);
  return optimize_with(MonteCarloEvaluator(params, mc), costs, grid);
}

}  // namespace bgg
