// SPDX-License-Identifier: Apache-2.0
//
// Node-level event simulation of one vehicle network.
//
// Three competing Poisson streams drive the run: the attacker captures one
// honest node at a time (rate attacker_rate), the honest chain finalizes a
// block proposed by a uniformly elected leader (rate defender_rate), and the
// network is observed (rate observation_rate). Exits are judged only at
// observations, so at those epochs the captured count follows the same law
// as the aggregate process in process.hpp while being generated by an
// unrelated sampling route.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bgg/game.hpp"
#include "bgg/process.hpp"
#include "bgg/rng.hpp"
#include "json.hpp"

namespace bgg {

enum class Tier { edge, fog, cloud };
enum class Owner { honest, captured, reserve };

/// Vehicle components (edge), service-centre equipment (fog) and HQ
/// databases (cloud). Node ids run through the tiers in that order.
struct Topology {
  int component_nodes = 0;
  int service_nodes = 0;
  int hq_nodes = 0;
  /// Relative capture weight per tier. Uniform by default; unequal weights
  /// are an exploratory extension and do not change burst statistics.
  std::array<double, 3> capture_weight{1.0, 1.0, 1.0};

  int total() const { return component_nodes + service_nodes + hq_nodes; }

  static Topology all_edge(int total_nodes) { return {total_nodes, 0, 0, {1.0, 1.0, 1.0}}; }

  friend bool operator==(const Topology&, const Topology&) = default;
};

inline void validate(const Topology& t, int total_nodes) {
  if (t.component_nodes < 0 || t.service_nodes < 0 || t.hq_nodes < 0)
    throw std::invalid_argument("topology node counts must be >= 0");
  if (t.total() != total_nodes)
    throw std::invalid_argument("topology node counts must sum to total_nodes");
  for (double w : t.capture_weight)
    if (!std::isfinite(w) || w <= 0.0)
      throw std::invalid_argument("topology capture weights must be finite and > 0");
}

struct NodeState {
  int id = 0;
  Tier tier = Tier::edge;
  Owner owner = Owner::honest;
  std::optional<double> capture_time;
};

enum class EventType { start, capture, finalize, observe, inject };

inline std::string_view to_string(EventType t) {
  switch (t) {
    case EventType::start: return "start";
    case EventType::capture: return "capture";
    case EventType::finalize: return "finalize";
    case EventType::observe: return "observe";
    case EventType::inject: return "inject";
  }
  return "?";
}

/// One log record. `node` is the captured node or the elected leader (-1
/// for pre-existing honest blocks); `count` is M for start and B for inject.
struct Event {
  double time = 0.0;
  EventType type = EventType::observe;
  int node = -1;
  int count = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

struct SimOutcome {
  bool burst = false;
  std::optional<double> trigger_time;
  int injected = 0;
  int attacker = 0;  ///< captured nodes at the end
  std::int64_t defender = 0;
  int observations = 0;
  bool capped = false;
  std::vector<Event> log;

  friend bool operator==(const SimOutcome&, const SimOutcome&) = default;
};

/// Malformed event log; `line` is 1-based.
class LogError : public std::runtime_error {
 public:
  LogError(std::size_t line, const std::string& what)
      : std::runtime_error("event log line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Uniform choice among all nodes; captured nodes stay eligible.
inline int elect_leader(std::span<const NodeState> nodes, Xoshiro256& rng) {
  if (nodes.empty()) throw std::invalid_argument("elect_leader needs at least one node");
  return nodes[rng.below(nodes.size())].id;
}

namespace detail {

class Network {
 public:
  Network(const Topology& topo) : weights_(topo.capture_weight) {
    const int counts[3] = {topo.component_nodes, topo.service_nodes, topo.hq_nodes};
    for (int t = 0; t < 3; ++t)
      for (int i = 0; i < counts[t]; ++i)
        nodes_.push_back({static_cast<int>(nodes_.size()), static_cast<Tier>(t), Owner::honest, {}});
    uniform_ = weights_[0] == weights_[1] && weights_[1] == weights_[2];
  }

  std::span<const NodeState> nodes() const { return nodes_; }
  int captured() const { return captured_; }

  // Captures one non-captured node; -1 when none is left.
  int capture(double time, Xoshiro256& rng) {
    const int free = static_cast<int>(nodes_.size()) - captured_;
    if (free == 0) return -1;
    int pick = -1;
    if (uniform_) {
      auto k = rng.below(static_cast<std::uint64_t>(free));
      for (auto& n : nodes_)
        if (n.owner != Owner::captured && k-- == 0) {
          pick = n.id;
          break;
        }
    } else {
      double total = 0.0;
      for (const auto& n : nodes_)
        if (n.owner != Owner::captured) total += weight(n);
      double u = rng.uniform() * total;
      for (const auto& n : nodes_) {
        if (n.owner == Owner::captured) continue;
        pick = n.id;
        u -= weight(n);
        if (u < 0.0) break;
      }
    }
    mark(pick, time);
    return pick;
  }

  void mark(int id, double time) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    n.owner = Owner::captured;
    n.capture_time = time;
    ++captured_;
  }

  void add_reserve(int count) {
    for (int i = 0; i < count; ++i)
      nodes_.push_back({static_cast<int>(nodes_.size()), Tier::cloud, Owner::reserve, {}});
  }

 private:
  double weight(const NodeState& n) const { return weights_[static_cast<std::size_t>(n.tier)]; }

  std::vector<NodeState> nodes_;
  std::array<double, 3> weights_;
  bool uniform_ = true;
  int captured_ = 0;
};

}  // namespace detail

/// Runs one network simulation (run `index` under `seed`). In Safety mode
/// the HQ injects B ~ Binomial(n, rho) reserve nodes at the first
/// observation where the captured count has reached majority - 1.
inline SimOutcome run_network_sim(const Topology& topology, const GameParams& params,
                                  const std::optional<ReservePolicy>& policy, Mode mode,
                                  std::uint64_t seed, std::uint64_t index = 0,
                                  bool record_log = true) {
  validate(params);
  validate(topology, params.total_nodes);
  if (mode == Mode::safety && !policy)
    throw std::invalid_argument("safety mode requires a reserve policy");
  if (policy) validate(*policy);

  auto events = substream(seed, index, Stream::events);
  auto picks = substream(seed, index, Stream::nodes);
  auto reserve_rng = substream(seed, index, Stream::reserve);

  SimOutcome out;
  detail::Network net(topology);
  auto log = [&](Event e) {
    if (record_log) out.log.push_back(e);
  };
  const int majority = Thresholds::majority(params.total_nodes);
  const double total_rate = params.attacker_rate + params.defender_rate + params.observation_rate;
  double t = 0.0;
  bool injected = false;

  log({0.0, EventType::start, -1, params.total_nodes});
  for (int i = 0; i < params.initial_attacker; ++i) log({0.0, EventType::capture, net.capture(0.0, picks), 0});
  for (int i = 0; i < params.initial_defender; ++i) log({0.0, EventType::finalize, -1, 0});
  out.defender = params.initial_defender;

  for (;;) {
    // Observation epoch.
    log({t, EventType::observe, -1, 0});
    const int k = out.observations++;
    const bool attacker_hit = net.captured() >= majority + out.injected;
    const bool defender_hit = out.defender >= majority;
    if (attacker_hit || defender_hit) {
      out.burst = attacker_hit && !defender_hit;
      break;
    }
    if (k >= params.max_epochs) {
      out.capped = true;
      break;
    }
    if (mode == Mode::safety && !injected && net.captured() >= majority - 1) {
      injected = true;
      out.injected = sample_reserve(*policy, reserve_rng);
      out.trigger_time = t;
      net.add_reserve(out.injected);
      log({t, EventType::inject, -1, out.injected});
    }
    // Advance to the next observation.
    for (;;) {
      t += -std::log(detail::open_uniform(events)) / total_rate;
      const double u = events.uniform() * total_rate;
      if (u < params.attacker_rate) {
        const int id = net.capture(t, picks);
        if (id >= 0) log({t, EventType::capture, id, 0});
      } else if (u < params.attacker_rate + params.defender_rate) {
        log({t, EventType::finalize, elect_leader(net.nodes(), picks), 0});
        ++out.defender;
      } else {
        break;
      }
    }
  }
  out.attacker = net.captured();
  return out;
}

/// Re-derives an outcome from its event log alone.
inline SimOutcome replay(std::span<const Event> log) {
  SimOutcome out;
  if (log.empty()) return out;
  if (log[0].type != EventType::start) throw LogError(1, "first record must be 'start'");
  if (log[0].count < 2) throw LogError(1, "start record needs total_nodes >= 2");
  const int total_nodes = log[0].count;
  const int majority = Thresholds::majority(total_nodes);
  std::vector<bool> captured(static_cast<std::size_t>(total_nodes), false);
  bool ended = false;
  double last = log[0].time;
  out.log.assign(log.begin(), log.end());

  for (std::size_t i = 1; i < log.size(); ++i) {
    const auto& e = log[i];
    const std::size_t line = i + 1;
    if (ended) throw LogError(line, "record after the game ended");
    if (!(e.time >= last)) throw LogError(line, "timestamp out of order");
    last = e.time;
    const int size = static_cast<int>(captured.size());
    switch (e.type) {
      case EventType::start:
        throw LogError(line, "duplicate start record");
      case EventType::capture:
        if (e.node < 0 || e.node >= size) throw LogError(line, "capture of unknown node");
        if (captured[static_cast<std::size_t>(e.node)]) throw LogError(line, "node captured twice");
        captured[static_cast<std::size_t>(e.node)] = true;
        ++out.attacker;
        break;
      case EventType::finalize:
        if (e.node < -1 || e.node >= size) throw LogError(line, "finalize by unknown leader");
        ++out.defender;
        break;
      case EventType::inject:
        if (out.trigger_time) throw LogError(line, "second reserve injection");
        if (e.count < 0) throw LogError(line, "negative reserve count");
        out.trigger_time = e.time;
        out.injected = e.count;
        captured.resize(captured.size() + static_cast<std::size_t>(e.count), false);
        break;
      case EventType::observe: {
        ++out.observations;
        const bool attacker_hit = out.attacker >= majority + out.injected;
        const bool defender_hit = out.defender >= majority;
        if (attacker_hit || defender_hit) {
          out.burst = attacker_hit && !defender_hit;
          ended = true;
        }
        break;
      }
    }
  }
  out.capped = !ended && out.observations > 0;
  return out;
}

inline nlohmann::json to_json(const Event& e) {
  nlohmann::json j{{"t", e.time}, {"type", std::string(to_string(e.type))}};
  if (e.type == EventType::start) j["nodes"] = e.count;
  if (e.type == EventType::inject) j["count"] = e.count;
  if (e.type == EventType::capture || e.type == EventType::finalize) j["node"] = e.node;
  return j;
}

/// One JSON object per line.
inline void write_event_log(std::ostream& os, std::span<const Event> log) {
  for (const auto& e : log) os << to_json(e).dump() << '\n';
}

inline std::vector<Event> parse_event_log(std::istream& is) {
  std::vector<Event> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(is, text)) {
    ++line;
    if (text.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& err) {
      throw LogError(line, std::string("not valid JSON: ") + err.what());
    }
    if (!j.is_object()) throw LogError(line, "record must be an object");
    auto field = [&](const char* key) -> const nlohmann::json& {
      if (!j.contains(key)) throw LogError(line, std::string("missing field '") + key + "'");
      return j.at(key);
    };
    Event e;
    const auto& t = field("t");
    if (!t.is_number() || !std::isfinite(t.get<double>())) throw LogError(line, "bad time");
    e.time = t.get<double>();
    const auto& type = field("type");
    if (!type.is_string()) throw LogError(line, "bad type");
    const auto name = type.get<std::string>();
    auto integer = [&](const char* key) {
      const auto& v = field(key);
      if (!v.is_number_integer()) throw LogError(line, std::string("field '") + key + "' must be an integer");
      return v.get<int>();
    };
    if (name == "start") {
      e.type = EventType::start;
      e.count = integer("nodes");
    } else if (name == "capture") {
      e.type = EventType::capture;
      e.node = integer("node");
    } else if (name == "finalize") {
      e.type = EventType::finalize;
      e.node = integer("node");
    } else if (name == "observe") {
      e.type = EventType::observe;
    } else if (name == "inject") {
      e.type = EventType::inject;
      e.count = integer("count");
    } else {
      throw LogError(line, "unknown record type '" + name + "'");
    }
    out.push_back(e);
  }
  return out;
}

inline SimOutcome replay(std::istream& is) {
  const auto events = parse_event_log(is);
  return replay(events);
}

}  // namespace bgg
