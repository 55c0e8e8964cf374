// SPDX-License-Identifier: Apache-2.0
//
// Trajectory generation for the block-accrual race observed at random epochs.
//
// Between consecutive observations an exponential gap with rate
// `observation_rate` elapses; conditional on the gap, attacker and defender
// gains are independent Poisson counts. Reserve availability is drawn from
// its own substream so Regular and Safety runs of the same index share every
// increment.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>

#include "bgg/game.hpp"
#include "bgg/rng.hpp"

namespace bgg {

struct IncrementPair {
  std::int64_t attacker = 0;
  std::int64_t defender = 0;
  double gap = 0.0;
};

namespace detail {

inline std::int64_t poisson_draw(double mean, Xoshiro256& rng) {
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<std::int64_t>(mean)(rng);
}

// Uniform in the open interval (0, 1).
inline double open_uniform(Xoshiro256& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

inline IncrementPair sample_increment_pair(double attacker_rate, double defender_rate,
                                           double observation_rate, Xoshiro256& rng) {
  IncrementPair inc;
  inc.gap = -std::log(detail::open_uniform(rng)) / observation_rate;
  inc.attacker = detail::poisson_draw(attacker_rate * inc.gap, rng);
  inc.defender = detail::poisson_draw(defender_rate * inc.gap, rng);
  return inc;
}

/// Binomial(n, rho) as a count of n uniform trials. Always consumes n draws,
/// so the realized reserve is pathwise monotone in both n and rho.
inline int sample_reserve(const ReservePolicy& policy, Xoshiro256& rng) {
  int available = 0;
  for (int i = 0; i < policy.reserve_count; ++i)
    if (rng.uniform() < policy.availability) ++available;
  return available;
}

/// Exit-relevant facts of one path, without the epoch list.
struct PathSummary {
  std::optional<int> nu;
  std::optional<int> mu;
  std::int64_t attacker_before = 0;  ///< A_{nu-1} (A_0 when nu = 0)
  std::int64_t attacker_at = 0;      ///< A at the stopping epoch
  std::int64_t defender_before = 0;
  std::int64_t defender_at = 0;
  int reserve = 0;
  bool capped = false;

  bool burst() const { return nu && (!mu || *nu < *mu); }
};

/// Runs one path until either player crosses its level or `max_epochs`
/// observations pass. `on_epoch(k, epoch)` sees every observation.
template <class OnEpoch>
PathSummary run_path(const GameParams& params, int attacker_level, int defender_level,
                     Xoshiro256& increments, OnEpoch&& on_epoch) {
  PathSummary s;
  Epoch cur{0.0, params.initial_attacker, params.initial_defender};
  Epoch prev = cur;
  for (int k = 0;; ++k) {
    if (k > 0) {
      prev = cur;
      const auto inc = sample_increment_pair(params.attacker_rate, params.defender_rate,
                                             params.observation_rate, increments);
      cur.time += inc.gap;
      cur.attacker += inc.attacker;
      cur.defender += inc.defender;
    }
    on_epoch(k, cur);
    const bool attacker_hit = cur.attacker >= attacker_level;
    const bool defender_hit = cur.defender >= defender_level;
    if (attacker_hit) s.nu = k;
    if (defender_hit) s.mu = k;
    if (attacker_hit || defender_hit || k >= params.max_epochs) {
      s.capped = !(attacker_hit || defender_hit);
      s.attacker_before = prev.attacker;
      s.attacker_at = cur.attacker;
      s.defender_before = prev.defender;
      s.defender_at = cur.defender;
      return s;
    }
  }
}

/// Summary of path `index` under master `seed`; shared by the estimators.
inline PathSummary sample_path_summary(const GameParams& params,
                                       const std::optional<ReservePolicy>& policy, Mode mode,
                                       std::uint64_t seed, std::uint64_t index) {
  int reserve = 0;
  if (mode == Mode::safety) {
    if (!policy) throw std::invalid_argument("safety mode requires a reserve policy");
    auto rng = substream(seed, index, Stream::reserve);
    reserve = sample_reserve(*policy, rng);
  }
  const auto th = Thresholds::make(params.total_nodes, reserve);
  auto inc = substream(seed, index, Stream::increments);
  auto s = run_path(params, th.safety, th.regular, inc, [](int, const Epoch&) {});
  s.reserve = reserve;
  return s;
}

inline GameTrajectory sample_trajectory(const GameParams& params,
                                        const std::optional<ReservePolicy>& policy, Mode mode,
                                        std::uint64_t seed, std::uint64_t index = 0) {
  validate(params);
  if (policy) validate(*policy);
  GameTrajectory t;
  if (mode == Mode::safety) {
    if (!policy) throw std::invalid_argument("safety mode requires a reserve policy");
    auto rng = substream(seed, index, Stream::reserve);
    t.realized_reserve = sample_reserve(*policy, rng);
  }
  const auto th = Thresholds::make(params.total_nodes, t.realized_reserve);
  auto inc = substream(seed, index, Stream::increments);
  const auto s = run_path(params, th.safety, th.regular, inc,
                          [&](int, const Epoch& e) { t.epochs.push_back(e); });
  t.nu = s.nu;
  t.mu = s.mu;
  t.capped = s.capped;
  return t;
}

/// First epochs at which A_k >= thresholds.safety and H_k >= thresholds.regular.
inline std::pair<std::optional<int>, std::optional<int>> exit_indices(
    const GameTrajectory& trajectory, const Thresholds& thresholds) {
  std::optional<int> nu, mu;
  for (int k = 0; k < static_cast<int>(trajectory.epochs.size()); ++k) {
    const auto& e = trajectory.epochs[static_cast<std::size_t>(k)];
    if (!nu && e.attacker >= thresholds.safety) nu = k;
    if (!mu && e.defender >= thresholds.regular) mu = k;
  }
  return {nu, mu};
}

/// tau_{nu-1}: the last observation before the attacker crosses its level.
inline std::optional<double> safety_trigger_epoch(const GameTrajectory& trajectory) {
  if (!trajectory.nu || *trajectory.nu < 1) return std::nullopt;
  const auto k = static_cast<std::size_t>(*trajectory.nu - 1);
  if (k >= trajectory.epochs.size()) return std::nullopt;
  return trajectory.epochs[k].time;
}

}  // namespace bgg
