// SPDX-License-Identifier: Apache-2.0
//
// State of the attacker/defender block-accrual game.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bgg {

/// Strategy of the defending player.
enum class Mode { regular, safety };

inline std::string_view to_string(Mode m) {
  return m == Mode::regular ? "regular" : "safety";
}

inline Mode parse_mode(std::string_view s) {
  if (s == "regular") return Mode::regular;
  if (s == "safety") return Mode::safety;
  throw std::invalid_argument("unknown mode '" + std::string(s) +
                              "' (expected regular|safety)");
}

/// Parameters of one vehicle network and the two competing block streams.
struct GameParams {
  int total_nodes = 4;            ///< M
  double attacker_rate = 1.0;     ///< blocks per unit time captured by the attacker
  double defender_rate = 1.0;     ///< honest blocks per unit time
  double observation_rate = 1.0;  ///< observation epochs per unit time
  int initial_attacker = 0;
  int initial_defender = 0;
  int max_epochs = 10000;

  friend bool operator==(const GameParams&, const GameParams&) = default;
};

/// HQ reserve: `reserve_count` nodes, each available with probability `availability`.
struct ReservePolicy {
  int reserve_count = 0;
  double availability = 1.0;

  friend bool operator==(const ReservePolicy&, const ReservePolicy&) = default;
};

namespace detail {
inline bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }
}  // namespace detail

inline void validate(const GameParams& p) {
  if (p.total_nodes < 2) throw std::invalid_argument("total_nodes must be >= 2");
  if (!detail::finite_nonneg(p.attacker_rate))
    throw std::invalid_argument("attacker_rate must be finite and >= 0");
  if (!detail::finite_nonneg(p.defender_rate))
    throw std::invalid_argument("defender_rate must be finite and >= 0");
  if (!std::isfinite(p.observation_rate) || p.observation_rate <= 0.0)
    throw std::invalid_argument("observation_rate must be finite and > 0");
  if (p.initial_attacker < 0 || p.initial_attacker > p.total_nodes)
    throw std::invalid_argument("initial_attacker must lie in [0, total_nodes]");
  if (p.initial_defender < 0 || p.initial_defender > p.total_nodes)
    throw std::invalid_argument("initial_defender must lie in [0, total_nodes]");
  if (p.max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
}

inline void validate(const ReservePolicy& r) {
  if (r.reserve_count < 0) throw std::invalid_argument("reserve_count must be >= 0");
  if (!(r.availability >= 0.0 && r.availability <= 1.0))
    throw std::invalid_argument("availability must lie in [0, 1]");
}

/// Absorption levels. A strict majority of M captures the network; a
/// realized reserve of B honest nodes pushes the attacker's level up by B.
struct Thresholds {
  int regular = 0;  ///< floor(M/2) + 1
  int safety = 0;   ///< regular + B

  static constexpr int majority(int total_nodes) { return total_nodes / 2 + 1; }

  static Thresholds make(int total_nodes, int reserve = 0) {
    if (reserve < 0) throw std::invalid_argument("reserve must be >= 0");
    const int r = majority(total_nodes);
    return {r, r + reserve};
  }

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

struct Epoch {
  double time = 0.0;
  std::int64_t attacker = 0;
  std::int64_t defender = 0;

  friend bool operator==(const Epoch&, const Epoch&) = default;
};

/// Observed path (tau_k, A_k, H_k) up to the first exit or the epoch cap.
struct GameTrajectory {
  std::vector<Epoch> epochs;
  std::optional<int> nu;  ///< attacker exit index
  std::optional<int> mu;  ///< defender exit index
  int realized_reserve = 0;
  bool capped = false;

  /// Attacker wins: its exit strictly precedes the defender's. Ties go to
  /// the defender.
  bool burst() const { return nu && (!mu || *nu < *mu); }

  friend bool operator==(const GameTrajectory&, const GameTrajectory&) = default;
};

}  // namespace bgg
