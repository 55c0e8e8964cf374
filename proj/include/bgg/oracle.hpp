// SPDX-License-Identifier: Apache-2.0
//
// Exact dynamic-programming values for small games.
//
// Integrating two Poisson counts against an exponential observation gap
// gives a negative-multinomial increment law per epoch:
//
//   P{x, y} = p0 * C(x + y, x) * pa^x * ph^y,
//   pa = la / L, ph = lh / L, p0 = d / L, L = la + lh + d.
//
// The chain (A_k, H_k) only moves up, so absorption values follow from one
// backward sweep over the lattice of non-absorbed states. Tails over the
// infinite attacker overshoot are summed in closed form. A second, truncated
// value-iteration route exists to cross-check the sweep.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bgg/estimators.hpp"
#include "bgg/game.hpp"

namespace bgg {

inline constexpr std::size_t kMaxOracleStates = 10000;

enum class OracleMethod { backward_sweep, value_iteration };

struct OracleValue {
  double value = 0.0;
  double tail_mass = 0.0;  ///< increment mass lumped into attacker absorption
  std::size_t states = 0;

  bool tail_warning() const { return tail_mass > 1e-9; }
};

struct IncrementLaw {
  double attack = 0.0;  ///< pa
  double defend = 0.0;  ///< ph
  double stay = 1.0;    ///< p0, also the mass of (0, 0)
  double attacker_marginal = 0.0;  ///< la / (la + d); P{x >= r} = this^r

  static IncrementLaw make(const GameParams& p) {
    const double total = p.attacker_rate + p.defender_rate + p.observation_rate;
    return {p.attacker_rate / total, p.defender_rate / total, p.observation_rate / total,
            p.attacker_rate / (p.attacker_rate + p.observation_rate)};
  }

  double pmf(std::int64_t x, std::int64_t y) const {
    if (x < 0 || y < 0) return 0.0;
    double term = stay * std::pow(defend, static_cast<double>(y));
    for (std::int64_t i = 1; i <= x; ++i)
      term *= attack * static_cast<double>(i + y) / static_cast<double>(i);
    return term;
  }
};

namespace detail {

// table[x][y] = P{x, y} for x < rows, y < cols.
inline std::vector<std::vector<double>> increment_table(const IncrementLaw& law, int rows,
                                                        int cols) {
  std::vector<std::vector<double>> t(static_cast<std::size_t>(rows),
                                     std::vector<double>(static_cast<std::size_t>(cols), 0.0));
  for (int x = 0; x < rows; ++x)
    for (int y = 0; y < cols; ++y) {
      if (x == 0)
        t[0][y] = y == 0 ? law.stay : t[0][y - 1] * law.defend;
      else
        t[x][y] = t[x - 1][y] * law.attack * (x + y) / x;
    }
  return t;
}

inline void check_state_space(std::int64_t attacker_span, std::int64_t defender_span) {
  if (attacker_span > 0 && defender_span > 0 &&
      static_cast<std::uint64_t>(attacker_span) * static_cast<std::uint64_t>(defender_span) >
          kMaxOracleStates)
    throw std::length_error("oracle state space exceeds " + std::to_string(kMaxOracleStates) +
                            " states");
}

inline std::vector<double> binomial_weights(const ReservePolicy& policy) {
  const int n = policy.reserve_count;
  const double rho = policy.availability;
  std::vector<double> w(static_cast<std::size_t>(n) + 1);
  double coeff = 1.0;
  for (int b = 0; b <= n; ++b) {
    if (b > 0) coeff = coeff * (n - b + 1) / b;
    w[static_cast<std::size_t>(b)] = coeff * std::pow(rho, b) * std::pow(1.0 - rho, n - b);
  }
  return w;
}

// Value of the exit functional from the initial state with attacker level
// `ta` and defender level `th`; exact backward sweep.
inline double functional_sweep(const GameParams& params, int ta, int th,
                               const TransformPoint& pt) {
  const std::int64_t a0 = params.initial_attacker, h0 = params.initial_defender;
  auto exit_weight = [&](std::int64_t a_pre, std::int64_t h_pre, std::int64_t a, std::int64_t h) {
    return std::pow(pt.g0, static_cast<double>(a_pre)) * std::pow(pt.g1, static_cast<double>(a)) *
           std::pow(pt.z0, static_cast<double>(h_pre)) * std::pow(pt.z1, static_cast<double>(h));
  };
  if (h0 >= th) return 0.0;
  if (a0 >= ta) return exit_weight(a0, h0, a0, h0);

  const int ra = static_cast<int>(ta - a0), rh = static_cast<int>(th - h0);
  check_state_space(ra, rh);
  const auto law = IncrementLaw::make(params);
  if (law.stay >= 1.0) return 0.0;  // neither player ever moves
  const auto table = increment_table(law, ra, rh);
  const double u = law.attack * pt.g1;         // attacker weight inside the tail sum
  const double v = law.defend * pt.z1;
  const double self = 1.0 - pt.zeta * law.stay;

  std::vector<double> f(static_cast<std::size_t>(ra) * rh, 0.0);
  auto at = [&](int i, int j) -> double& { return f[static_cast<std::size_t>(i) * rh + j]; };

  for (int i = ra - 1; i >= 0; --i) {
    for (int j = rh - 1; j >= 0; --j) {
      const std::int64_t a = a0 + i, h = h0 + j;
      const int r = ra - i, s = rh - j;  // increments needed to exit
      double burst = 0.0;
      for (int y = 0; y < s; ++y) {
        // sum_{x >= r} C(x+y, x) u^x = (1-u)^{-(y+1)} - sum_{x < r} C(x+y, x) u^x
        double head = 0.0, term = 1.0;
        for (int x = 0; x < r; ++x) {
          if (x > 0) term *= u * (x + y) / x;
          head += term;
        }
        const double tail = std::pow(1.0 - u, -(y + 1.0)) - head;
        burst += law.stay * std::pow(v, y) * std::pow(pt.g1, static_cast<double>(a)) *
                 std::pow(pt.z1, static_cast<double>(h)) * std::max(tail, 0.0);
      }
      burst *= std::pow(pt.g0, static_cast<double>(a)) * std::pow(pt.z0, static_cast<double>(h));
      double cont = 0.0;
      for (int x = 0; x < r; ++x)
        for (int y = 0; y < s; ++y)
          if (x != 0 || y != 0) cont += table[x][y] * at(i + x, j + y);
      at(i, j) = pt.zeta * (burst + cont) / self;
    }
  }
  return at(0, 0);
}

// Truncated value iteration for the plain burst probability.
inline OracleValue burst_value_iteration(const GameParams& params, int ta, int th,
                                         int truncation) {
  const std::int64_t a0 = params.initial_attacker, h0 = params.initial_defender;
  if (h0 >= th) return {0.0, 0.0, 0};
  if (a0 >= ta) return {1.0, 0.0, 0};
  const int ra = static_cast<int>(ta - a0), rh = static_cast<int>(th - h0);
  check_state_space(ra, rh);
  const auto law = IncrementLaw::make(params);

  const double moving = law.attack + law.defend;
  if (truncation <= 0) {
    truncation = moving <= 0.0 ? 0
                               : static_cast<int>(std::ceil(std::log(1e-12) / std::log(moving)));
    truncation = std::max(truncation, ra + rh);
  }
  const auto table = increment_table(law, truncation + 1, truncation + 1);

  struct Edge {
    std::size_t to;
    double p;
  };
  const std::size_t n = static_cast<std::size_t>(ra) * rh;
  std::vector<double> absorb(n, 0.0);
  std::vector<std::vector<Edge>> edges(n);
  double kept = 0.0;
  for (int x = 0; x <= truncation; ++x)
    for (int y = 0; x + y <= truncation; ++y) kept += table[x][y];
  const double tail = std::max(0.0, 1.0 - kept);

  for (int i = 0; i < ra; ++i)
    for (int j = 0; j < rh; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * rh + j;
      absorb[idx] = tail;
      for (int x = 0; x <= truncation; ++x)
        for (int y = 0; x + y <= truncation; ++y) {
          const double p = table[x][y];
          const bool attacker_out = i + x >= ra, defender_out = j + y >= rh;
          if (defender_out) continue;
          if (attacker_out)
            absorb[idx] += p;
          else
            edges[idx].push_back({static_cast<std::size_t>(i + x) * rh + (j + y), p});
        }
    }

  std::vector<double> value(n, 0.0), next(n, 0.0);
  for (int iter = 0; iter < 1000000; ++iter) {
    double delta = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      double acc = absorb[s];
      for (const auto& e : edges[s]) acc += e.p * value[e.to];
      delta = std::max(delta, std::abs(acc - value[s]));
      next[s] = acc;
    }
    value.swap(next);
    if (delta < 1e-16) break;
  }
  return {value[0], tail, n};
}

}  // namespace detail

/// P{x, y} of the per-epoch increment pair.
inline double increment_pmf(const GameParams& params, std::int64_t x, std::int64_t y) {
  return IncrementLaw::make(params).pmf(x, y);
}

/// Exact burst probability with a fixed realized reserve B.
inline OracleValue oracle_burst_probability(const GameParams& params, int reserve,
                                            OracleMethod method = OracleMethod::backward_sweep,
                                            int truncation = 0) {
  validate(params);
  const auto th = Thresholds::make(params.total_nodes, reserve);
  if (method == OracleMethod::value_iteration)
    return detail::burst_value_iteration(params, th.safety, th.regular, truncation);
  const std::size_t states =
      static_cast<std::size_t>(std::max(0, th.safety - params.initial_attacker)) *
      static_cast<std::size_t>(std::max(0, th.regular - params.initial_defender));
  return {detail::functional_sweep(params, th.safety, th.regular, TransformPoint{}), 0.0, states};
}

/// Exact burst probability under a strategy; Safety averages over B ~ Binomial(n, rho).
inline OracleValue oracle_burst_probability(const GameParams& params, Mode mode,
                                            const std::optional<ReservePolicy>& policy,
                                            OracleMethod method = OracleMethod::backward_sweep,
                                            int truncation = 0) {
  if (mode == Mode::regular) return oracle_burst_probability(params, 0, method, truncation);
  if (!policy) throw std::invalid_argument("safety mode requires a reserve policy");
  validate(*policy);
  detail::check_state_space(
      Thresholds::make(params.total_nodes, policy->reserve_count).safety - params.initial_attacker,
      Thresholds::majority(params.total_nodes) - params.initial_defender);
  const auto w = detail::binomial_weights(*policy);
  OracleValue out;
  for (std::size_t b = 0; b < w.size(); ++b) {
    if (w[b] == 0.0) continue;
    const auto v = oracle_burst_probability(params, static_cast<int>(b), method, truncation);
    out.value += w[b] * v.value;
    out.tail_mass = std::max(out.tail_mass, v.tail_mass);
    out.states = std::max(out.states, v.states);
  }
  return out;
}

/// Exact value of the joint exit functional, averaged over B when a policy is given.
inline double oracle_joint_functional(const GameParams& params, const TransformPoint& point,
                                      const std::optional<ReservePolicy>& policy = std::nullopt) {
  validate(params);
  validate(point);
  const int majority = Thresholds::majority(params.total_nodes);
  if (!policy) return detail::functional_sweep(params, majority, majority, point);
  validate(*policy);
  const auto w = detail::binomial_weights(*policy);
  double sum = 0.0;
  for (std::size_t b = 0; b < w.size(); ++b)
    if (w[b] != 0.0)
      sum += w[b] * detail::functional_sweep(params, majority + static_cast<int>(b), majority, point);
  return sum;
}

/// Exact law of A_{nu-1} given an observed attacker exit with nu >= 1,
/// pooled over B ~ Binomial(n, rho) when a policy is given.
inline PreExitDistribution oracle_pre_exit_distribution(
    const GameParams& params, const std::optional<ReservePolicy>& policy = std::nullopt) {
  validate(params);
  if (policy) validate(*policy);
  const int majority = Thresholds::majority(params.total_nodes);
  const auto law = IncrementLaw::make(params);
  const std::vector<double> weights =
      policy ? detail::binomial_weights(*policy) : std::vector<double>{1.0};

  PreExitDistribution d;
  d.pmf.assign(detail::pre_exit_support(params, policy), 0.0);
  const std::int64_t a0 = params.initial_attacker, h0 = params.initial_defender;
  for (std::size_t b = 0; b < weights.size(); ++b) {
    if (weights[b] == 0.0) continue;
    const int ta = majority + static_cast<int>(b);
    if (a0 >= ta || h0 >= majority) continue;  // nu = 0 or never observed
    if (law.stay >= 1.0) continue;
    const int ra = static_cast<int>(ta - a0), rh = static_cast<int>(majority - h0);
    detail::check_state_space(ra, rh);
    const auto table = detail::increment_table(law, ra, rh);
    // Expected visits per state, counting the self-loop.
    std::vector<double> entered(static_cast<std::size_t>(ra) * rh, 0.0);
    entered[0] = 1.0;
    for (int i = 0; i < ra; ++i)
      for (int j = 0; j < rh; ++j) {
        const double visits = entered[static_cast<std::size_t>(i) * rh + j] / (1.0 - law.stay);
        if (visits == 0.0) continue;
        d.pmf[static_cast<std::size_t>(a0 + i)] +=
            weights[b] * visits * std::pow(law.attacker_marginal, ra - i);
        for (int x = 0; i + x < ra; ++x)
          for (int y = 0; j + y < rh; ++y)
            if (x != 0 || y != 0)
              entered[static_cast<std::size_t>(i + x) * rh + (j + y)] += visits * table[x][y];
      }
  }
  double total = 0.0;
  for (double m : d.pmf) total += m;
  if (total <= 0.0) throw std::domain_error("no attacker exit with nu >= 1 is possible");
  double below = 0.0;
  for (std::size_t k = 0; k < d.pmf.size(); ++k) {
    d.pmf[k] /= total;
    if (k <= static_cast<std::size_t>(params.total_nodes / 2)) below += d.pmf[k];
  }
  d.p_below = std::min(below, 1.0);
  return d;
}

}  // namespace bgg
