// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo estimators for burst probabilities, the pre-exit attacker
// level and the joint exit functional. Path i of every estimator uses
// substream i of the configured seed, so estimators called with the same
// McConfig share their random numbers.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bgg/game.hpp"
#include "bgg/process.hpp"
#include "bgg/stats.hpp"

namespace bgg {

struct McConfig {
  std::uint64_t trajectories = 100000;
  std::uint64_t seed = 1;
  double ci_level = 0.95;
  unsigned workers = 0;  ///< 0 picks the hardware concurrency

  friend bool operator==(const McConfig&, const McConfig&) = default;
};

inline void validate(const McConfig& mc) {
  if (mc.trajectories < 1) throw std::invalid_argument("trajectories must be >= 1");
  if (!(mc.ci_level > 0.0 && mc.ci_level < 1.0))
    throw std::invalid_argument("ci_level must lie in (0, 1)");
}

struct BurstEstimate {
  Mode mode = Mode::regular;
  double q_hat = 0.0;
  Interval ci;
  double cap_hit_fraction = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t bursts = 0;

  /// More than 1% of paths hit the epoch cap; the estimate is biased low.
  bool cap_warning() const { return cap_hit_fraction > 0.01; }
};

/// Law of A_{nu-1} over paths where the attacker's exit is observed with nu >= 1.
struct PreExitDistribution {
  std::vector<double> pmf;
  double p_below = 0.0;  ///< mass on k = 0..floor(M/2)
  std::uint64_t samples = 0;
};

struct TransformPoint {
  double zeta = 1.0;
  double g0 = 1.0;
  double g1 = 1.0;
  double z0 = 1.0;
  double z1 = 1.0;
};

inline void validate(const TransformPoint& p) {
  for (double v : {p.zeta, p.g0, p.g1, p.z0, p.z1})
    if (!(v > 0.0 && v <= 1.0))
      throw std::invalid_argument("transform arguments must lie in (0, 1]");
}

/// Poisson pmf (lambda*tau)^k exp(-lambda*tau) / k!.
inline double poisson_kernel(double rate, double time, int k) {
  if (rate < 0.0 || time < 0.0 || k < 0)
    throw std::invalid_argument("poisson_kernel needs rate, time, k >= 0");
  const double mean = rate * time;
  if (mean == 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0));
}

namespace detail {

inline constexpr std::uint64_t kBlock = 1 << 16;

// Feeds every path summary, in index order, to `sink`.
template <class Sink>
void for_each_path(const GameParams& params, const std::optional<ReservePolicy>& policy,
                   Mode mode, const McConfig& mc, Sink&& sink) {
  validate(params);
  validate(mc);
  if (mode == Mode::safety && !policy)
    throw std::invalid_argument("safety mode requires a reserve policy");
  if (policy) validate(*policy);
  for (std::uint64_t base = 0; base < mc.trajectories; base += kBlock) {
    const std::uint64_t count = std::min(kBlock, mc.trajectories - base);
    const auto block = parallel_map<PathSummary>(count, mc.workers, [&](std::uint64_t i) {
      return sample_path_summary(params, policy, mode, mc.seed, base + i);
    });
    for (const auto& s : block) sink(s);
  }
}

struct Tally {
  std::uint64_t samples = 0;
  std::uint64_t bursts = 0;
  std::uint64_t capped = 0;
  std::vector<std::uint64_t> pre_exit;
  std::uint64_t pre_exit_samples = 0;

  void add(const PathSummary& s) {
    ++samples;
    if (s.burst()) ++bursts;
    if (s.capped) ++capped;
    if (s.nu && *s.nu >= 1) {
      const auto k = static_cast<std::size_t>(s.attacker_before);
      if (k >= pre_exit.size()) pre_exit.resize(k + 1, 0);
      ++pre_exit[k];
      ++pre_exit_samples;
    }
  }
};

inline BurstEstimate make_burst_estimate(const Tally& t, Mode mode, double ci_level) {
  BurstEstimate e;
  e.mode = mode;
  e.samples = t.samples;
  e.bursts = t.bursts;
  e.q_hat = static_cast<double>(t.bursts) / static_cast<double>(t.samples);
  e.ci = wilson_interval(t.bursts, t.samples, z_for_level(ci_level));
  e.cap_hit_fraction = static_cast<double>(t.capped) / static_cast<double>(t.samples);
  return e;
}

inline PreExitDistribution make_pre_exit(const Tally& t, int total_nodes, std::size_t min_size) {
  if (t.pre_exit_samples == 0)
    throw std::domain_error("no path realized an attacker exit with nu >= 1");
  PreExitDistribution d;
  d.samples = t.pre_exit_samples;
  d.pmf.assign(std::max(min_size, t.pre_exit.size()), 0.0);
  const double n = static_cast<double>(t.pre_exit_samples);
  std::uint64_t below = 0;
  for (std::size_t k = 0; k < t.pre_exit.size(); ++k) {
    d.pmf[k] = static_cast<double>(t.pre_exit[k]) / n;
    if (k <= static_cast<std::size_t>(total_nodes / 2)) below += t.pre_exit[k];
  }
  d.p_below = static_cast<double>(below) / n;
  return d;
}

inline std::size_t pre_exit_support(const GameParams& params,
                                    const std::optional<ReservePolicy>& policy) {
  const int reserve = policy ? policy->reserve_count : 0;
  const int top = std::max(params.total_nodes, Thresholds::majority(params.total_nodes) + reserve - 1);
  return static_cast<std::size_t>(top) + 1;
}

}  // namespace detail

/// Fraction of paths on which the attacker exits strictly before the defender.
/// In Safety mode each path first draws its reserve B ~ Binomial(n, rho).
inline BurstEstimate estimate_burst_probability(const GameParams& params, Mode mode,
                                                const std::optional<ReservePolicy>& policy,
                                                const McConfig& mc) {
  detail::Tally t;
  detail::for_each_path(params, policy, mode, mc, [&](const PathSummary& s) { t.add(s); });
  return detail::make_burst_estimate(t, mode, mc.ci_level);
}

/// Law of A_{nu-1}. Without a policy the attacker level is the plain
/// majority; with one, nu is the exit over the reserve-raised level.
inline PreExitDistribution estimate_pre_exit_distribution(
    const GameParams& params, const McConfig& mc,
    const std::optional<ReservePolicy>& policy = std::nullopt) {
  detail::Tally t;
  const Mode mode = policy ? Mode::safety : Mode::regular;
  detail::for_each_path(params, policy, mode, mc, [&](const PathSummary& s) { t.add(s); });
  return detail::make_pre_exit(t, params.total_nodes, detail::pre_exit_support(params, policy));
}

struct SafetyEstimate {
  BurstEstimate burst;
  std::optional<PreExitDistribution> pre_exit;  ///< absent when no path has nu >= 1
};

/// Burst probability and pre-exit law from a single Safety batch.
inline SafetyEstimate estimate_safety(const GameParams& params, const ReservePolicy& policy,
                                      const McConfig& mc) {
  detail::Tally t;
  detail::for_each_path(params, policy, Mode::safety, mc,
                        [&](const PathSummary& s) { t.add(s); });
  SafetyEstimate out{detail::make_burst_estimate(t, Mode::safety, mc.ci_level), std::nullopt};
  if (t.pre_exit_samples > 0)
    out.pre_exit = detail::make_pre_exit(t, params.total_nodes,
                                         detail::pre_exit_support(params, policy));
  return out;
}

/// Monte Carlo mean of zeta^nu g0^A_{nu-1} g1^A_nu z0^H_{nu-1} z1^H_nu on
/// the burst event {nu < mu}. At nu = 0 the pre-exit levels are A_0, H_0.
/// With a policy the reserve is drawn per path, averaging over B.
inline double estimate_joint_functional(const GameParams& params, const TransformPoint& point,
                                        const std::optional<ReservePolicy>& policy,
                                        const McConfig& mc) {
  validate(point);
  const Mode mode = policy ? Mode::safety : Mode::regular;
  double sum = 0.0;
  std::uint64_t n = 0;
  detail::for_each_path(params, policy, mode, mc, [&](const PathSummary& s) {
    ++n;
    if (!s.burst()) return;
    sum += std::pow(point.zeta, *s.nu) *
           std::pow(point.g0, static_cast<double>(s.attacker_before)) *
           std::pow(point.g1, static_cast<double>(s.attacker_at)) *
           std::pow(point.z0, static_cast<double>(s.defender_before)) *
           std::pow(point.z1, static_cast<double>(s.defender_at));
  });
  return sum / static_cast<double>(n);
}

}  // namespace bgg
