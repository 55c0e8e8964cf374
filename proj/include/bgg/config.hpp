// SPDX-License-Identifier: Apache-2.0
//
// Run configuration, read from a JSON document:
//
//   {
//     "game":     {"total_nodes": 10, "attacker_rate": 1.0, "defender_rate": 1.2,
//                  "observation_rate": 1.0, "initial_attacker": 0,
//                  "initial_defender": 0, "max_epochs": 10000},
//     "policy":   {"reserve_count": 3, "availability": 0.75},
//     "costs":    {"unit_safety_cost": 0.3, "burst_loss": 25.0, "pricing": "per_node"},
//     "grid":     {"n_max": 6, "rho_step": 0.25},
//     "mc":       {"trajectories": 100000, "seed": 7, "ci_level": 0.95, "workers": 0},
//     "topology": {"component_nodes": 6, "service_nodes": 3, "hq_nodes": 1,
//                  "capture_weight": [1, 1, 1]}
//   }
//
// Only game.total_nodes, game.attacker_rate and game.defender_rate are
// required. Unknown keys are errors.
#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "bgg/economics.hpp"
#include "bgg/estimators.hpp"
#include "bgg/game.hpp"
#include "bgg/netsim.hpp"
#include "json.hpp"

namespace bgg {

/// Invalid configuration; `path()` is the dotted key that failed.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct RunConfig {
  GameParams game;
  ReservePolicy policy;
  CostParams costs;
  SearchGrid grid;
  McConfig mc;
  bool seed_given = false;  ///< mc.seed came from the file
  std::optional<Topology> topology;

  Topology effective_topology() const {
    return topology ? *topology : Topology::all_edge(game.total_nodes);
  }
};

namespace detail {

class Section {
 public:
  Section(const nlohmann::json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_, "must be an object");
  }

  std::string path(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  template <class T>
  void read(const std::string& key, T& out, bool required = false) {
    if (!has(key)) {
      if (required) throw ConfigError(path(key), "required field is missing");
      return;
    }
    const auto& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path(key), "must be a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(path(key), "must be an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) {
          out = v.get<T>();
        } else {
          const auto s = v.get<std::int64_t>();
          if (s < 0) throw ConfigError(path(key), "must be >= 0");
          out = static_cast<T>(s);
        }
      } else {
        const auto s = v.get<std::int64_t>();
        if (s < std::numeric_limits<T>::min() || s > std::numeric_limits<T>::max())
          throw ConfigError(path(key), "out of range");
        out = static_cast<T>(s);
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(path(key), "must be a number");
      out = v.get<T>();
    } else {
      if (!v.is_string()) throw ConfigError(path(key), "must be a string");
      out = v.get<T>();
    }
  }

  const nlohmann::json& at(const std::string& key) const { return j_.at(key); }

  void reject_unknown() const {
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) throw ConfigError(path(key), "unknown field");
  }

 private:
  const nlohmann::json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

inline void check(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path, what);
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& root) {
  RunConfig cfg;
  detail::Section top(root, "");

  if (!top.has("game")) throw ConfigError("game", "required section is missing");
  {
    detail::Section s(top.at("game"), "game");
    auto& g = cfg.game;
    s.read("total_nodes", g.total_nodes, true);
    s.read("attacker_rate", g.attacker_rate, true);
    s.read("defender_rate", g.defender_rate, true);
    s.read("observation_rate", g.observation_rate);
    s.read("initial_attacker", g.initial_attacker);
    s.read("initial_defender", g.initial_defender);
    s.read("max_epochs", g.max_epochs);
    s.reject_unknown();
    detail::check(g.total_nodes >= 2, "game.total_nodes", "must be >= 2");
    detail::check(detail::finite_nonneg(g.attacker_rate), "game.attacker_rate", "must be finite and >= 0");
    detail::check(detail::finite_nonneg(g.defender_rate), "game.defender_rate", "must be finite and >= 0");
    detail::check(std::isfinite(g.observation_rate) && g.observation_rate > 0.0,
                  "game.observation_rate", "must be finite and > 0");
    detail::check(g.initial_attacker >= 0 && g.initial_attacker <= g.total_nodes,
                  "game.initial_attacker", "must lie in [0, total_nodes]");
    detail::check(g.initial_defender >= 0 && g.initial_defender <= g.total_nodes,
                  "game.initial_defender", "must lie in [0, total_nodes]");
    detail::check(g.max_epochs >= 1, "game.max_epochs", "must be >= 1");
  }
  if (top.has("policy")) {
    detail::Section s(top.at("policy"), "policy");
    s.read("reserve_count", cfg.policy.reserve_count);
    s.read("availability", cfg.policy.availability);
    s.reject_unknown();
    detail::check(cfg.policy.reserve_count >= 0, "policy.reserve_count", "must be >= 0");
    detail::check(cfg.policy.availability >= 0.0 && cfg.policy.availability <= 1.0,
                  "policy.availability", "must lie in [0, 1]");
  }
  if (top.has("costs")) {
    detail::Section s(top.at("costs"), "costs");
    s.read("unit_safety_cost", cfg.costs.unit_safety_cost);
    s.read("burst_loss", cfg.costs.burst_loss);
    std::string pricing = std::string(to_string(cfg.costs.pricing));
    s.read("pricing", pricing);
    s.reject_unknown();
    detail::check(detail::finite_nonneg(cfg.costs.unit_safety_cost), "costs.unit_safety_cost",
                  "must be finite and >= 0");
    detail::check(detail::finite_nonneg(cfg.costs.burst_loss), "costs.burst_loss",
                  "must be finite and >= 0");
    if (pricing == "per_node")
      cfg.costs.pricing = ReservePricing::per_node;
    else if (pricing == "expected_availability")
      cfg.costs.pricing = ReservePricing::expected_availability;
    else
      throw ConfigError("costs.pricing", "must be 'per_node' or 'expected_availability'");
  }
  if (top.has("grid")) {
    detail::Section s(top.at("grid"), "grid");
    s.read("n_max", cfg.grid.n_max);
    s.read("rho_step", cfg.grid.rho_step);
    s.reject_unknown();
    detail::check(cfg.grid.n_max >= 0, "grid.n_max", "must be >= 0");
    detail::check(cfg.grid.rho_step > 0.0 && cfg.grid.rho_step <= 1.0, "grid.rho_step",
                  "must lie in (0, 1]");
  }
  if (top.has("mc")) {
    detail::Section s(top.at("mc"), "mc");
    s.read("trajectories", cfg.mc.trajectories);
    cfg.seed_given = s.has("seed");
    s.read("seed", cfg.mc.seed);
    s.read("ci_level", cfg.mc.ci_level);
    s.read("workers", cfg.mc.workers);
    s.reject_unknown();
    detail::check(cfg.mc.trajectories >= 1, "mc.trajectories", "must be >= 1");
    detail::check(cfg.mc.ci_level > 0.0 && cfg.mc.ci_level < 1.0, "mc.ci_level",
                  "must lie in (0, 1)");
  }
  if (top.has("topology")) {
    detail::Section s(top.at("topology"), "topology");
    Topology t;
    s.read("component_nodes", t.component_nodes);
    s.read("service_nodes", t.service_nodes);
    s.read("hq_nodes", t.hq_nodes);
    if (s.has("capture_weight")) {
      const auto& w = top.at("topology").at("capture_weight");
      detail::check(w.is_array() && w.size() == 3, "topology.capture_weight",
                    "must be an array of 3 numbers");
      for (std::size_t i = 0; i < 3; ++i) {
        detail::check(w[i].is_number(), "topology.capture_weight", "must be an array of 3 numbers");
        t.capture_weight[i] = w[i].get<double>();
      }
    }
    s.reject_unknown();
    try {
      validate(t, cfg.game.total_nodes);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("topology", e.what());
    }
    cfg.topology = t;
  }
  top.reject_unknown();
  return cfg;
}

inline RunConfig parse_config_text(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

/// Inverse of parse_config; the result parses back to an equal config.
inline nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["game"] = {{"total_nodes", c.game.total_nodes},
               {"attacker_rate", c.game.attacker_rate},
               {"defender_rate", c.game.defender_rate},
               {"observation_rate", c.game.observation_rate},
               {"initial_attacker", c.game.initial_attacker},
               {"initial_defender", c.game.initial_defender},
               {"max_epochs", c.game.max_epochs}};
  j["policy"] = {{"reserve_count", c.policy.reserve_count},
                 {"availability", c.policy.availability}};
  j["costs"] = {{"unit_safety_cost", c.costs.unit_safety_cost},
                {"burst_loss", c.costs.burst_loss},
                {"pricing", std::string(to_string(c.costs.pricing))}};
  j["grid"] = {{"n_max", c.grid.n_max}, {"rho_step", c.grid.rho_step}};
  j["mc"] = {{"trajectories", c.mc.trajectories},
             {"seed", c.mc.seed},
             {"ci_level", c.mc.ci_level},
             {"workers", c.mc.workers}};
  if (c.topology)
    j["topology"] = {{"component_nodes", c.topology->component_nodes},
                     {"service_nodes", c.topology->service_nodes},
                     {"hq_nodes", c.topology->hq_nodes},
                     {"capture_weight", c.topology->capture_weight}};
  return j;
}

}  // namespace bgg
