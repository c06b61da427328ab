#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

#include "torusq/experiment.hpp"
#include "torusq/plot.hpp"

namespace torusq {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("torusq_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string config_error_field(const json& j) {
  try {
    auto cfg = config_from_json(j);
    validate(cfg);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<none>";
}

TEST(Config, RejectsBadInput) {
  EXPECT_EQ(config_error_field({{"builtin", "kloosterman"}, {"primes", {101}}, {"colour", 1}}), "colour");
  EXPECT_EQ(config_error_field({{"builtin", "kloosterman"}, {"system", "p=5; m=1; n=1; G1 = X1"}}), "system");
  EXPECT_EQ(config_error_field({{"primes", {101}}}), "builtin");
  EXPECT_EQ(config_error_field({{"builtin", "kloosterman"}, {"primes", {100}}}), "primes");
  EXPECT_EQ(config_error_field({{"task", "shrink"}, {"builtin", "kloosterman"}, {"primes", {101}}, {"radii", {0.5}}}),
            "radii");
  EXPECT_EQ(config_error_field({{"task", "discrepancy"}, {"builtin", "kloosterman"}, {"primes", {101}}}), "seed");
  EXPECT_EQ(config_error_field({{"task", "scaling"}, {"builtin", "kloosterman"}, {"primes", {101, 103}}, {"seed", 1}}),
            "primes");
  EXPECT_EQ(config_error_field({{"task", "walk"}, {"builtin", "kloosterman"}}), "task");
  EXPECT_EQ(config_error_field({{"builtin", "kloosterman"}, {"primes", {101}}, {"eta", "big"}}), "eta");
  EXPECT_EQ(config_error_field(json::array()), "");
}

TEST(Config, AcceptsCompleteDiscrepancyConfig) {
  auto cfg = config_from_json({{"task", "discrepancy"},
                               {"builtin", "kloosterman"},
                               {"primes", {{"from", 101}, {"to", 2003}, {"count", 15}}},
                               {"centers", {{"policy", "mixed"}, {"count", 200}, {"seed", 7}}}});
  validate(cfg);
  EXPECT_EQ(cfg.primes.size(), 15u);
  EXPECT_EQ(cfg.primes.front(), 101u);
  EXPECT_EQ(cfg.primes.back(), 2003u);
  EXPECT_EQ(cfg.centers.describe(), "mixed(M=200,seed=7)");
  EXPECT_FALSE(cfg.radii.empty());
}

TEST(Config, SystemFixesThePrime) {
  auto cfg = config_from_json({{"system", "p=7; m=1; n=1; G1 = X1^2"}});
  validate(cfg);
  ASSERT_EQ(cfg.primes.size(), 1u);
  EXPECT_EQ(cfg.primes[0], 7u);
  auto wrong = config_from_json({{"system", "p=7; m=1; n=1; G1 = X1^2"}, {"primes", {11}}});
  EXPECT_THROW(validate(wrong), ConfigError);
}

TEST(Config, HashTracksNumericInputsOnly) {
  auto a = config_from_json({{"builtin", "kloosterman"}, {"primes", {101}}, {"out", "x"}, {"threads", 1}});
  auto b = config_from_json({{"builtin", "kloosterman"}, {"primes", {101}}, {"out", "y"}, {"threads", 8}});
  auto c = config_from_json({{"builtin", "kloosterman"}, {"primes", {103}}});
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
}

TEST(PrimeList, Parsing) {
  EXPECT_EQ(parse_prime_list("5,13,29"), (std::vector<std::uint64_t>{5, 13, 29}));
  EXPECT_EQ(parse_prime_list("10..30"), (std::vector<std::uint64_t>{11, 13, 17, 19, 23, 29}));
  EXPECT_EQ(parse_prime_list("10..30:3"), (std::vector<std::uint64_t>{11, 19, 29}));
  EXPECT_THROW(parse_prime_list("5,x"), ConfigError);
  EXPECT_THROW(parse_prime_list("30..10"), ConfigError);
  EXPECT_EQ(primes_in_range(101, 2003).size(), 279u);
}

TEST(Runner, EtaTaskWritesReportAndManifest) {
  const auto dir = scratch_dir("eta");
  ExperimentConfig cfg;
  cfg.task = Task::eta;
  cfg.builtin = BuiltinFamily::parse("moments:1,2");
  cfg.primes = {5, 13, 29};
  cfg.out = dir.string();
  const auto result = run_experiment(cfg);
  ASSERT_EQ(result.files, (std::vector<std::string>{"eta.json"}));
  const auto report = json::parse(slurp(dir / "eta.json"));
  ASSERT_EQ(report.at("entries").size(), 3u);
  for (const auto& e : report.at("entries")) EXPECT_NEAR(e.at("eta_hat").get<double>(), 0.5, 1e-9);
  const auto manifest = json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest.at("files").size(), 1u);
  EXPECT_EQ(manifest.at("inputs").at("primes"), json({5, 13, 29}));
  EXPECT_TRUE(manifest.contains("config_hash"));
}

TEST(Runner, TableBudgetRaises) {
  ExperimentConfig cfg;
  cfg.task = Task::spectrum;
  cfg.builtin = BuiltinFamily::parse("kloosterman");
  cfg.primes = {1009};
  cfg.budget.max_table_entries = 1000;
  cfg.out = scratch_dir("budget").string();
  EXPECT_THROW(run_experiment(cfg), BudgetError);
}

TEST(Runner, CloudCacheIsTransparent) {
  const auto dir = scratch_dir("cache");
  ExperimentConfig cfg;
  cfg.task = Task::discrepancy;
  cfg.builtin = BuiltinFamily::parse("kloosterman");
  cfg.primes = {101};
  cfg.centers = CenterPolicy{CenterKind::mixed, 20, 0};
  cfg.seed = 3;
  cfg.out = (dir / "plain").string();
  run_experiment(cfg);
  cfg.cache_dir = (dir / "cache").string();
  cfg.out = (dir / "cold").string();
  run_experiment(cfg);
  cfg.out = (dir / "warm").string();
  run_experiment(cfg);
  const auto reference = slurp(dir / "plain" / "discrepancy_p101.json");
  EXPECT_EQ(slurp(dir / "cold" / "discrepancy_p101.json"), reference);
  EXPECT_EQ(slurp(dir / "warm" / "discrepancy_p101.json"), reference);
}

TEST(Plot, RendersEachKind) {
  const auto dir = scratch_dir("plot");
  ExperimentConfig cfg;
  cfg.builtin = BuiltinFamily::parse("kloosterman");
  cfg.seed = 1;
  cfg.centers = CenterPolicy{CenterKind::mixed, 10, 0};
  cfg.out = dir.string();

  cfg.task = Task::scaling;
  cfg.primes = {101, 103, 107};
  cfg.radii = {0.05, 0.2};
  run_experiment(cfg);
  const auto scaling = render_plot((dir / "scaling.json").string(), PlotKind::loglog_scaling);
  EXPECT_NE(scaling.find("<svg"), std::string::npos);
  EXPECT_NE(scaling.find("slope="), std::string::npos);

  cfg.task = Task::shrink;
  cfg.primes = {101};
  run_experiment(cfg);
  const auto deviation = render_plot((dir / "shrink_p101.json").string(), PlotKind::deviation_vs_radius);
  EXPECT_NE(deviation.find("radius=0.05"), std::string::npos);

  cfg.task = Task::spectrum;
  run_experiment(cfg);
  const auto heat = render_plot((dir / "spectrum_p101.csv").string(), PlotKind::spectrum_heatmap);
  EXPECT_NE(heat.find("<rect"), std::string::npos);

  EXPECT_THROW(render_plot((dir / "shrink_p101.json").string(), PlotKind::loglog_scaling), ConfigError);
  EXPECT_THROW(render_plot((dir / "scaling.json").string(), PlotKind::deviation_vs_radius), ConfigError);
  EXPECT_THROW(render_plot((dir / "scaling.csv").string(), PlotKind::spectrum_heatmap), ConfigError);
  EXPECT_THROW(parse_plot_kind("pie"), ConfigError);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TORUSQ_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch_dir("cli");
  const auto out = (dir / "out").string();
  EXPECT_EQ(run_cli("eta --builtin moments:1,2 --primes 5,13 --out " + out), 0);
  EXPECT_TRUE(fs::exists(fs::path(out) / "eta.json"));
  EXPECT_EQ(run_cli("walk"), 2);
  EXPECT_EQ(run_cli("eta --builtin kloosterman --primes 100 --out " + out), 2);
  EXPECT_EQ(run_cli("eta --builtin nosuch --primes 101 --out " + out), 2);
  EXPECT_EQ(run_cli("shrink --builtin kloosterman --primes 101 --radii 0.7 --out " + out), 2);
  EXPECT_EQ(run_cli("spectrum --builtin kloosterman --primes 1009 --out " + out +
                    " --config " + (dir / "budget.json").string()),
            2);
  {
    std::ofstream cfg(dir / "budget.json");
    cfg << R"({"budget": {"max_table_entries": 1000}})";
  }
  EXPECT_EQ(run_cli("spectrum --builtin kloosterman --primes 1009 --out " + out +
                    " --config " + (dir / "budget.json").string()),
            3);
  {
    std::ofstream cfg(dir / "bad.json");
    cfg << "{ not json";
  }
  EXPECT_EQ(run_cli("eta --config " + (dir / "bad.json").string()), 2);
  EXPECT_EQ(run_cli("plot " + (dir / "missing.json").string() + " --kind loglog-scaling --out x.svg"), 2);
}

}  // namespace
}  // namespace torusq
