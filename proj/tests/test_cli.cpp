// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bgg/cli.hpp"

namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = bgg::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string config(const std::string& name) {
  return std::string(BGG_CONFIG_DIR) + "/" + name;
}

fs::path temp_file(const std::string& name, const std::string& content = "") {
  const auto dir = fs::temp_directory_path() / "bgg_cli_tests";
  fs::create_directories(dir);
  const auto path = dir / name;
  if (!content.empty()) std::ofstream(path) << content;
  return path;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

TEST(Cli, EstimateWithIdleAttackerReportsZero) {
  const auto cfg = temp_file("idle.json",
      R"({"game": {"total_nodes": 4, "attacker_rate": 0, "defender_rate": 1}, "mc": {"trajectories": 2000}})");
  const auto r = run({"estimate", "--config", cfg.string(), "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["regular"]["q_hat"].get<double>(), 0.0);
  EXPECT_EQ(j["seed"].get<std::uint64_t>(), 3u);
}

TEST(Cli, EstimateReportParses) {
  const auto r = run({"estimate", "--config", config("symmetric_m4.json"), "--trajectories", "5000"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["trajectories"].get<int>(), 5000);
  EXPECT_LE(j["safety"]["q_hat"].get<double>(), j["regular"]["q_hat"].get<double>());
  EXPECT_TRUE(j["pre_exit"]["pmf"].is_array());
  EXPECT_TRUE(j["costs"]["total"].is_number());
}

TEST(Cli, NetworkEngineEstimate) {
  const auto r = run({"estimate", "--config", config("symmetric_m4.json"), "--engine", "network",
                      "--mode", "regular", "--trajectories", "20000"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  const auto n = j["regular"]["samples"].get<std::uint64_t>();
  const auto k = j["regular"]["bursts"].get<std::uint64_t>();
  EXPECT_TRUE(bgg::wilson_interval(k, n, 3.0).contains(11.0 / 32.0));
  EXPECT_TRUE(j["safety"].is_null());
}

TEST(Cli, SweepArgminMatchesOptimize) {
  for (bool exact : {true, false}) {
    std::vector<std::string> base{"--config", config("synthetic_scenario.json"), "--trajectories", "4000"};
    if (exact) base.push_back("--exact");
    auto sweep_args = base, opt_args = base;
    sweep_args.insert(sweep_args.begin(), "sweep");
    opt_args.insert(opt_args.begin(), "optimize");
    const auto sweep = run(sweep_args);
    const auto opt = run(opt_args);
    ASSERT_EQ(sweep.code, 0) << sweep.err;
    ASSERT_EQ(opt.code, 0) << opt.err;

    const auto rows = parse_csv(sweep.out);
    ASSERT_GT(rows.size(), 1u);
    EXPECT_EQ(sweep.out.substr(0, sweep.out.find('\n')), bgg::cli::kSweepHeader);
    double best = 1e300;
    int bn = -1;
    double brho = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      ASSERT_EQ(rows[i].size(), 7u);
      const double total = std::stod(rows[i][5]);
      if (rows[i][6] == "1" && total < best) {
        best = total;
        bn = std::stoi(rows[i][0]);
        brho = std::stod(rows[i][1]);
      }
    }
    const auto j = nlohmann::json::parse(opt.out);
    EXPECT_EQ(j["best"]["n"].get<int>(), bn);
    EXPECT_EQ(j["best"]["rho"].get<double>(), brho);
    EXPECT_EQ(j["best_cost"].get<double>(), best);
    EXPECT_EQ(rows.size() - 1, 7u * 4u);
  }
}

TEST(Cli, CommandsAreDeterministic) {
  const std::vector<std::vector<std::string>> commands{
      {"simulate", "--config", config("synthetic_scenario.json"), "--trajectories", "5"},
      {"simulate", "--config", config("synthetic_scenario.json"), "--engine", "network", "--mode", "safety"},
      {"estimate", "--config", config("symmetric_m4.json")},
      {"optimize", "--config", config("symmetric_m4.json"), "--trajectories", "3000"},
      {"sweep", "--config", config("symmetric_m4.json"), "--trajectories", "3000"},
      {"oracle", "--config", config("symmetric_m4.json")}};
  for (const auto& c : commands) {
    auto args = c;
    args.insert(args.end(), {"--seed", "99"});
    const auto a = run(args);
    const auto b = run(args);
    EXPECT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out) << c[0];
    EXPECT_FALSE(a.out.empty());
  }
}

TEST(Cli, WorkerCountDoesNotChangeOutput) {
  const auto a = run({"estimate", "--config", config("symmetric_m4.json"), "--workers", "1"});
  const auto b = run({"estimate", "--config", config("symmetric_m4.json"), "--workers", "3"});
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, SimulateNetworkThenReplay) {
  const auto log = temp_file("run.jsonl");
  const auto sim = run({"simulate", "--config", config("synthetic_scenario.json"), "--engine", "network",
                        "--mode", "safety", "--seed", "5", "--run", "3", "--out", log.string()});
  ASSERT_EQ(sim.code, 0) << sim.err;
  const auto rep = run({"replay", "--in", log.string()});
  ASSERT_EQ(rep.code, 0) << rep.err;
  const auto j = nlohmann::json::parse(rep.out);

  bgg::RunConfig cfg = bgg::load_config(config("synthetic_scenario.json"));
  const auto o = bgg::run_network_sim(cfg.effective_topology(), cfg.game, cfg.policy, bgg::Mode::safety, 5, 3);
  EXPECT_EQ(j["burst"].get<bool>(), o.burst);
  EXPECT_EQ(j["injected"].get<int>(), o.injected);
  EXPECT_EQ(j["observations"].get<int>(), o.observations);
  EXPECT_EQ(j["events"].get<std::size_t>(), o.log.size());
}

TEST(Cli, SimulateWritesTrajectories) {
  const auto r = run({"simulate", "--config", config("symmetric_m4.json"), "--mode", "safety",
                      "--trajectories", "3", "--seed", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["index"].get<int>(), count);
    EXPECT_TRUE(j["epochs"].is_array());
    EXPECT_EQ(j["mode"], "safety");
    ++count;
  }
  EXPECT_EQ(count, 3);
}

TEST(Cli, OracleReport) {
  const auto r = run({"oracle", "--config", config("symmetric_m4.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["q0"].get<double>(), 11.0 / 32.0, 1e-14);
  EXPECT_LT(j["value_iteration"]["max_abs_diff"].get<double>(), 1e-10);
  EXPECT_LT(j["q1"].get<double>(), j["q0"].get<double>());
}

TEST(Cli, ValidationFailuresExitOne) {
  EXPECT_EQ(run({"estimate", "--config", config("symmetric_m4.json"), "--ci"}).code, 1);
  EXPECT_EQ(run({"estimate", "--config", "/nonexistent.json"}).code, 1);
  EXPECT_EQ(run({"estimate", "--config", config("symmetric_m4.json"), "--mode", "panic"}).code, 1);
  EXPECT_EQ(run({"estimate"}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  const auto bad = temp_file("bad.json", R"({"game": {"total_nodes": 4, "attacker_rate": 1, "defender_rate": 1}, "policy": {"availability": 1.5}})");
  const auto r = run({"estimate", "--config", bad.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("policy.availability"), std::string::npos);
  const auto bad_log = temp_file("bad.jsonl", "{\"t\":0,\"type\":\"start\",\"nodes\":4}\n{\"t\":-1,\"type\":\"observe\"}\n");
  const auto rl = run({"replay", "--in", bad_log.string()});
  EXPECT_EQ(rl.code, 1);
  EXPECT_NE(rl.err.find("line 2"), std::string::npos);
}

TEST(Cli, CapExplosionExitsTwo) {
  const auto cfg = temp_file("stuck.json",
      R"({"game": {"total_nodes": 4, "attacker_rate": 0, "defender_rate": 0, "max_epochs": 5}, "mc": {"trajectories": 100}})");
  const auto r = run({"estimate", "--config", cfg.string(), "--mode", "regular"});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.out.empty());  // report is still written
}

TEST(Cli, OracleStateCapExitsTwo) {
  const auto cfg = temp_file("huge.json",
      R"({"game": {"total_nodes": 400, "attacker_rate": 1, "defender_rate": 1}})");
  EXPECT_EQ(run({"oracle", "--config", cfg.string()}).code, 2);
}

TEST(Cli, HelpExitsZero) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("sweep"), std::string::npos);
}

}  // namespace
