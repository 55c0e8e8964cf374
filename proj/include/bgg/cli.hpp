// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: simulate, estimate, optimize, sweep, oracle and
// replay. Data goes to --out (or the output stream), diagnostics to the
// error stream. Exit codes: 0 success, 1 invalid input, 2 runtime failure.
#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bgg/config.hpp"
#include "bgg/economics.hpp"
#include "bgg/estimators.hpp"
#include "bgg/netsim.hpp"
#include "bgg/oracle.hpp"
#include "bgg/process.hpp"
#include "json.hpp"

namespace bgg::cli {

inline constexpr const char* kSweepHeader = "n,rho,q1_hat,q1_ci_low,q1_ci_high,total_cost,feasible";

enum ExitCode : int { ok = 0, invalid_input = 1, runtime_failure = 2 };

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Options {
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  std::string in_path;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> trajectories;
  std::optional<unsigned> workers;
  std::string engine = "process";
  bool ci = false;
  bool exact = false;
  std::uint64_t run = 0;
};

namespace detail {

using ordered_json = nlohmann::ordered_json;

inline ordered_json interval_json(const Interval& i) { return ordered_json::array({i.low, i.high}); }

inline ordered_json estimate_json(const BurstEstimate& e) {
  return {{"mode", std::string(to_string(e.mode))},
          {"q_hat", e.q_hat},
          {"ci_low", e.ci.low},
          {"ci_high", e.ci.high},
          {"cap_hit_fraction", e.cap_hit_fraction},
          {"samples", e.samples},
          {"bursts", e.bursts}};
}

inline ordered_json pre_exit_json(const PreExitDistribution& d) {
  return {{"pmf", d.pmf}, {"p_below", d.p_below}, {"samples", d.samples}};
}

inline ordered_json costs_json(const StrategyCosts& s) {
  return {{"regular_expected", s.regular_expected}, {"safety_expected", s.safety_expected},
          {"reserve_cost", s.reserve_cost},         {"total", s.total},
          {"q0", s.q0},                             {"q1", s.q1},
          {"p_below", s.p_below},                   {"reserve_count", s.reserve_count},
          {"availability", s.availability}};
}

inline ordered_json point_json(const std::optional<FrontierPoint>& p) {
  if (!p) return nullptr;
  return {{"n", p->n}, {"rho", p->rho}};
}

struct Context {
  const Options& opt;
  RunConfig cfg;
  std::ostream& out;
  std::ostream& err;
  int status = ok;

  void warn(const std::string& msg) {
    err << "warning: " << msg << '\n';
    status = runtime_failure;
  }
};

// Batch of network runs reduced to a burst estimate.
inline BurstEstimate network_estimate(const RunConfig& cfg, Mode mode) {
  const auto topo = cfg.effective_topology();
  const std::optional<ReservePolicy> policy =
      mode == Mode::safety ? std::optional<ReservePolicy>(cfg.policy) : std::nullopt;
  std::uint64_t bursts = 0, capped = 0;
  const std::uint64_t n = cfg.mc.trajectories;
  for (std::uint64_t base = 0; base < n; base += bgg::detail::kBlock) {
    const std::uint64_t count = std::min(bgg::detail::kBlock, n - base);
    const auto block = parallel_map<std::uint8_t>(count, cfg.mc.workers, [&](std::uint64_t i) {
      const auto o = run_network_sim(topo, cfg.game, policy, mode, cfg.mc.seed, base + i, false);
      return static_cast<std::uint8_t>((o.burst ? 1 : 0) | (o.capped ? 2 : 0));
    });
    for (auto b : block) {
      bursts += b & 1;
      capped += (b >> 1) & 1;
    }
  }
  BurstEstimate e;
  e.mode = mode;
  e.samples = n;
  e.bursts = bursts;
  e.q_hat = static_cast<double>(bursts) / static_cast<double>(n);
  e.ci = wilson_interval(bursts, n, z_for_level(cfg.mc.ci_level));
  e.cap_hit_fraction = static_cast<double>(capped) / static_cast<double>(n);
  return e;
}

inline std::vector<Mode> requested_modes(const Options& opt) {
  if (!opt.mode) return {Mode::regular, Mode::safety};
  return {parse_mode(*opt.mode)};
}

inline void cmd_simulate(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Mode mode = ctx.opt.mode ? parse_mode(*ctx.opt.mode) : Mode::regular;
  const std::optional<ReservePolicy> policy =
      mode == Mode::safety ? std::optional<ReservePolicy>(cfg.policy) : std::nullopt;
  if (ctx.opt.engine == "network") {
    const auto o = run_network_sim(cfg.effective_topology(), cfg.game, policy, mode, cfg.mc.seed,
                                   ctx.opt.run, true);
    write_event_log(ctx.out, o.log);
    ctx.err << "run " << ctx.opt.run << ": burst=" << (o.burst ? "true" : "false")
            << " injected=" << o.injected << " observations=" << o.observations << '\n';
    if (o.capped) ctx.warn("run hit the epoch cap");
    return;
  }
  if (ctx.opt.engine != "process")
    throw std::invalid_argument("unknown engine '" + ctx.opt.engine + "' (expected process|network)");
  const std::uint64_t count = ctx.opt.trajectories.value_or(1);
  std::uint64_t capped = 0;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto t = sample_trajectory(cfg.game, policy, mode, cfg.mc.seed, i);
    ordered_json epochs = ordered_json::array();
    for (const auto& e : t.epochs) epochs.push_back({e.time, e.attacker, e.defender});
    const auto trigger = safety_trigger_epoch(t);
    ordered_json j{{"index", i},
                   {"mode", std::string(to_string(mode))},
                   {"realized_reserve", t.realized_reserve},
                   {"nu", t.nu ? ordered_json(*t.nu) : ordered_json(nullptr)},
                   {"mu", t.mu ? ordered_json(*t.mu) : ordered_json(nullptr)},
                   {"burst", t.burst()},
                   {"capped", t.capped},
                   {"safety_trigger_time", trigger ? ordered_json(*trigger) : ordered_json(nullptr)},
                   {"epochs", epochs}};
    ctx.out << j.dump() << '\n';
    capped += t.capped ? 1 : 0;
  }
  if (capped > 0) ctx.warn(std::to_string(capped) + " trajectories hit the epoch cap");
}

inline void cmd_estimate(Context& ctx) {
  const auto& cfg = ctx.cfg;
  ordered_json j{{"command", "estimate"},
                 {"engine", ctx.opt.engine},
                 {"seed", cfg.mc.seed},
                 {"trajectories", cfg.mc.trajectories},
                 {"ci_level", cfg.mc.ci_level},
                 {"policy", {{"reserve_count", cfg.policy.reserve_count},
                             {"availability", cfg.policy.availability}}}};
  std::optional<BurstEstimate> regular, safety;
  std::optional<PreExitDistribution> pre_exit;
  for (Mode m : requested_modes(ctx.opt)) {
    BurstEstimate e;
    if (ctx.opt.engine == "network") {
      e = network_estimate(cfg, m);
    } else if (ctx.opt.engine == "process") {
      if (m == Mode::regular) {
        e = estimate_burst_probability(cfg.game, m, std::nullopt, cfg.mc);
        if (ctx.opt.mode) {
          try {
            pre_exit = estimate_pre_exit_distribution(cfg.game, cfg.mc);
          } catch (const std::domain_error&) {
          }
        }
      } else {
        auto s = estimate_safety(cfg.game, cfg.policy, cfg.mc);
        e = s.burst;
        pre_exit = s.pre_exit;
      }
    } else {
      throw std::invalid_argument("unknown engine '" + ctx.opt.engine + "' (expected process|network)");
    }
    if (e.cap_warning())
      ctx.warn(std::string(to_string(m)) + " estimate: cap-hit fraction " +
               format_double(e.cap_hit_fraction) + " exceeds 1%");
    (m == Mode::regular ? regular : safety) = e;
  }
  j["regular"] = regular ? estimate_json(*regular) : ordered_json(nullptr);
  j["safety"] = safety ? estimate_json(*safety) : ordered_json(nullptr);
  j["pre_exit"] = pre_exit ? pre_exit_json(*pre_exit) : ordered_json(nullptr);
  if (regular && safety) {
    const double p = pre_exit ? pre_exit->p_below : 1.0;
    j["costs"] = costs_json(total_cost(cfg.costs, cfg.policy, regular->q_hat, safety->q_hat, p));
  }
  ctx.out << j.dump(2) << '\n';
}

inline OptimizationResult run_optimizer(Context& ctx) {
  const auto& cfg = ctx.cfg;
  auto r = ctx.opt.exact ? optimize_with(OracleEvaluator(cfg.game), cfg.costs, cfg.grid)
                         : optimize(cfg.game, cfg.costs, cfg.grid, cfg.mc);
  if (r.cap_warning) ctx.warn("cap-hit fraction exceeds 1% at some grid point");
  return r;
}

inline void report_infeasible(Context& ctx, const OptimizationResult& r) {
  if (!r.best) {
    ctx.err << "error: no grid point satisfies the reserve sizing constraint\n";
    ctx.status = runtime_failure;
  }
}

inline void cmd_optimize(Context& ctx) {
  const auto r = run_optimizer(ctx);
  ordered_json surface = ordered_json::array();
  for (const auto& p : r.surface)
    surface.push_back({{"n", p.n},
                       {"rho", p.rho},
                       {"q1_hat", p.q1},
                       {"q1_ci_low", p.q1_ci.low},
                       {"q1_ci_high", p.q1_ci.high},
                       {"p_below", p.p_below},
                       {"regular_expected", p.costs.regular_expected},
                       {"safety_expected", p.costs.safety_expected},
                       {"reserve_cost", p.costs.reserve_cost},
                       {"total_cost", p.costs.total},
                       {"total_cost_low", p.cost_range.low},
                       {"total_cost_high", p.cost_range.high},
                       {"feasible", p.feasible},
                       {"safety_preferred", p.safety_preferred}});
  ordered_json frontier = ordered_json::array();
  for (const auto& f : r.frontier) frontier.push_back(point_json(f));
  ordered_json ties = ordered_json::array();
  for (const auto& f : r.indistinguishable) ties.push_back(point_json(f));
  ordered_json j{{"command", "optimize"},
                 {"source", ctx.opt.exact ? "oracle" : "monte_carlo"},
                 {"seed", ctx.cfg.mc.seed},
                 {"trajectories", ctx.cfg.mc.trajectories},
                 {"q0", r.q0},
                 {"q0_ci", interval_json(r.q0_ci)},
                 {"best", point_json(r.best)},
                 {"best_cost", r.best ? ordered_json(r.best_cost) : ordered_json(nullptr)},
                 {"infimum", point_json(r.infimum)},
                 {"frontier", frontier},
                 {"ambiguous", r.ambiguous()},
                 {"indistinguishable", ties},
                 {"infeasible_points", r.infeasible_count},
                 {"surface", surface}};
  ctx.out << j.dump(2) << '\n';
  report_infeasible(ctx, r);
}

inline void cmd_sweep(Context& ctx) {
  const auto r = run_optimizer(ctx);
  ctx.out << kSweepHeader << '\n';
  for (const auto& p : r.surface)
    ctx.out << p.n << ',' << format_double(p.rho) << ',' << format_double(p.q1) << ','
            << format_double(p.q1_ci.low) << ',' << format_double(p.q1_ci.high) << ','
            << format_double(p.costs.total) << ',' << (p.feasible ? 1 : 0) << '\n';
  report_infeasible(ctx, r);
}

inline void cmd_oracle(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto q0 = oracle_burst_probability(cfg.game, Mode::regular, std::nullopt);
  const auto q1 = oracle_burst_probability(cfg.game, Mode::safety, cfg.policy);
  const auto q0_vi =
      oracle_burst_probability(cfg.game, Mode::regular, std::nullopt, OracleMethod::value_iteration);
  const auto q1_vi =
      oracle_burst_probability(cfg.game, Mode::safety, cfg.policy, OracleMethod::value_iteration);
  auto pre_exit = [&](const std::optional<ReservePolicy>& p) -> ordered_json {
    try {
      return pre_exit_json(oracle_pre_exit_distribution(cfg.game, p));
    } catch (const std::domain_error&) {
      return nullptr;
    }
  };
  ordered_json j{
      {"command", "oracle"},
      {"policy", {{"reserve_count", cfg.policy.reserve_count},
                  {"availability", cfg.policy.availability}}},
      {"q0", q0.value},
      {"q1", q1.value},
      {"states", std::max(q0.states, q1.states)},
      {"value_iteration", {{"q0", q0_vi.value},
                           {"q1", q1_vi.value},
                           {"max_abs_diff", std::max(std::abs(q0.value - q0_vi.value),
                                                     std::abs(q1.value - q1_vi.value))},
                           {"tail_mass", std::max(q0_vi.tail_mass, q1_vi.tail_mass)}}},
      {"pre_exit_regular", pre_exit(std::nullopt)},
      {"pre_exit_safety", pre_exit(cfg.policy)}};
  ctx.out << j.dump(2) << '\n';
  if (q0_vi.tail_warning() || q1_vi.tail_warning())
    ctx.warn("value-iteration residual tail mass exceeds 1e-9");
}

inline void cmd_replay(Context& ctx, std::istream& in) {
  const auto o = replay(in);
  ordered_json j{{"command", "replay"},
                 {"burst", o.burst},
                 {"trigger_time", o.trigger_time ? ordered_json(*o.trigger_time) : ordered_json(nullptr)},
                 {"injected", o.injected},
                 {"attacker", o.attacker},
                 {"defender", o.defender},
                 {"observations", o.observations},
                 {"capped", o.capped},
                 {"events", o.log.size()}};
  ctx.out << j.dump(2) << '\n';
}

}  // namespace detail

/// Entry point shared by the executable and the tests.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"Blockchain governance game: burst probabilities and reserve optimization", "bgg"};
  app.require_subcommand(1);

  auto common = [&](CLI::App* sub, bool needs_config = true) {
    if (needs_config) sub->add_option("--config", opt.config_path, "run configuration (JSON)")->required();
    sub->add_option("--seed", opt.seed, "master seed (overrides mc.seed)");
    sub->add_option("--out", opt.out_path, "write data here instead of the output stream");
    sub->add_flag("--ci", opt.ci, "reproducibility mode: an explicit --seed is mandatory");
    sub->add_option("--workers", opt.workers, "worker threads (0 = all cores)");
  };
  auto* simulate = app.add_subcommand("simulate", "sample trajectories or a network event log");
  common(simulate);
  simulate->add_option("--mode", opt.mode, "regular|safety");
  simulate->add_option("--trajectories", opt.trajectories, "number of trajectories (process engine)");
  simulate->add_option("--engine", opt.engine, "process|network");
  simulate->add_option("--run", opt.run, "run index (network engine)");

  auto* estimate = app.add_subcommand("estimate", "Monte Carlo q0, q1 and pre-exit law");
  common(estimate);
  estimate->add_option("--mode", opt.mode, "restrict to regular|safety");
  estimate->add_option("--trajectories", opt.trajectories, "paths per estimate");
  estimate->add_option("--engine", opt.engine, "process|network");

  auto* optimize_cmd = app.add_subcommand("optimize", "optimal reserve configuration");
  common(optimize_cmd);
  optimize_cmd->add_option("--trajectories", opt.trajectories, "paths per grid point");
  optimize_cmd->add_flag("--exact", opt.exact, "use exact oracle probabilities");

  auto* sweep = app.add_subcommand("sweep", "cost surface as comma-separated rows");
  common(sweep);
  sweep->add_option("--trajectories", opt.trajectories, "paths per grid point");
  sweep->add_flag("--exact", opt.exact, "use exact oracle probabilities");

  auto* oracle_cmd = app.add_subcommand("oracle", "exact dynamic-programming values");
  common(oracle_cmd);

  auto* replay_cmd = app.add_subcommand("replay", "re-derive an outcome from an event log");
  common(replay_cmd, false);
  replay_cmd->add_option("--in", opt.in_path, "event log (line-delimited JSON)")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return invalid_input;
  }
  for (auto* sub : app.get_subcommands()) opt.command = sub->get_name();

  if (opt.ci && !opt.seed) {
    err << "error: --ci requires an explicit --seed\n";
    return invalid_input;
  }

  std::ofstream file;
  std::ostream* data = &out;
  auto open_out = [&]() -> bool {
    if (opt.out_path.empty()) return true;
    file.open(opt.out_path, std::ios::binary | std::ios::trunc);
    if (!file) {
      err << "error: cannot open '" << opt.out_path << "' for writing\n";
      return false;
    }
    data = &file;
    return true;
  };

  try {
    if (opt.command == "replay") {
      std::ifstream in(opt.in_path);
      if (!in) {
        err << "error: cannot open '" << opt.in_path << "'\n";
        return invalid_input;
      }
      if (!open_out()) return runtime_failure;
      detail::Context ctx{opt, RunConfig{}, *data, err};
      detail::cmd_replay(ctx, in);
      return ctx.status;
    }
    RunConfig cfg = load_config(opt.config_path);
    if (opt.seed) cfg.mc.seed = *opt.seed;
    if (opt.trajectories) {
      if (*opt.trajectories < 1) throw ConfigError("--trajectories", "must be >= 1");
      cfg.mc.trajectories = *opt.trajectories;
    }
    if (opt.workers) cfg.mc.workers = *opt.workers;
    if (opt.mode) parse_mode(*opt.mode);
    if (!open_out()) return runtime_failure;
    detail::Context ctx{opt, cfg, *data, err};
    if (opt.command == "simulate") detail::cmd_simulate(ctx);
    else if (opt.command == "estimate") detail::cmd_estimate(ctx);
    else if (opt.command == "optimize") detail::cmd_optimize(ctx);
    else if (opt.command == "sweep") detail::cmd_sweep(ctx);
    else if (opt.command == "oracle") detail::cmd_oracle(ctx);
    return ctx.status;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return invalid_input;
  } catch (const LogError& e) {
    err << "error: " << e.what() << '\n';
    return invalid_input;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return invalid_input;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return runtime_failure;
  }
}

}  // namespace bgg::cli
