// Command-line front end for torusq experiments.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "torusq/torusq.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kBudget = 3 };

struct Overrides {
  std::string config;
  std::string builtin;
  std::string system;
  std::string primes;
  std::vector<std::uint64_t> prime;
  std::vector<double> radii;
  std::optional<double> rho;
  std::string centers;
  std::optional<std::size_t> center_count;
  std::optional<std::uint64_t> grid;
  std::optional<double> cutoff;
  std::string eta;
  std::optional<std::uint64_t> monte_carlo;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<unsigned> threads;
  std::string cache_dir;
  bool refresh_cache = false;
};

void add_experiment_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON experiment config");
  cmd->add_option("--builtin", o.builtin, "builtin family, e.g. moments:1,2 or kloosterman");
  cmd->add_option("--system", o.system, "polynomial system text");
  cmd->add_option("--primes", o.primes, "list 5,13,29 or range 101..2003[:count]");
  cmd->add_option("--prime", o.prime, "single prime (repeatable)");
  cmd->add_option("--radii", o.radii, "ball radii")->delimiter(',');
  cmd->add_option("--rho", o.rho, "smoothing radius");
  cmd->add_option("--centers", o.centers, "center policy: data, random or mixed");
  cmd->add_option("--center-count", o.center_count, "number of random centers");
  cmd->add_option("--grid", o.grid, "variance grid resolution T");
  cmd->add_option("--cutoff", o.cutoff, "spectral cutoff V");
  cmd->add_option("--eta", o.eta, "eta value or 'measured'");
  cmd->add_option("--monte-carlo", o.monte_carlo, "Monte Carlo samples for the variance");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  cmd->add_option("--cache-dir", o.cache_dir, "cloud cache directory");
  cmd->add_flag("--refresh-cache", o.refresh_cache, "recompute cached clouds");
}

torusq::ExperimentConfig build_config(const std::string& task, const Overrides& o) {
  using torusq::ConfigError;
  torusq::ExperimentConfig cfg = o.config.empty() ? torusq::ExperimentConfig{} : torusq::load_config(o.config);
  cfg.task = torusq::parse_task(task);
  if (!o.builtin.empty()) {
    try {
      cfg.builtin = torusq::BuiltinFamily::parse(o.builtin);
    } catch (const torusq::DomainError& e) {
      throw ConfigError("builtin", e.what());
    }
    cfg.system_text.reset();
  }
  if (!o.system.empty()) {
    cfg.system_text = o.system;
    cfg.builtin.reset();
  }
  if (!o.primes.empty()) cfg.primes = torusq::parse_prime_list(o.primes);
  if (!o.prime.empty()) cfg.primes = o.prime;
  if (!o.radii.empty()) cfg.radii = o.radii;
  if (o.rho) cfg.smoothing = *o.rho;
  if (!o.centers.empty()) {
    if (o.centers == "data") {
      cfg.centers.kind = torusq::CenterKind::data;
    } else if (o.centers == "random") {
      cfg.centers.kind = torusq::CenterKind::random;
    } else if (o.centers == "mixed") {
      cfg.centers.kind = torusq::CenterKind::mixed;
    } else {
      throw ConfigError("centers", "unknown policy '" + o.centers + "'");
    }
  }
  if (o.center_count) cfg.centers.random_count = *o.center_count;
  if (o.grid) cfg.grid = *o.grid;
  if (o.cutoff) cfg.cutoff = *o.cutoff;
  if (!o.eta.empty()) {
    if (o.eta == "measured") {
      cfg.eta.reset();
    } else {
      try {
        cfg.eta = std::stod(o.eta);
      } catch (const std::exception&) {
        throw ConfigError("eta", "expected a number or 'measured'");
      }
    }
  }
  if (o.monte_carlo) cfg.monte_carlo = *o.monte_carlo;
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.out = o.out;
  if (o.threads) cfg.threads = *o.threads;
  if (!o.cache_dir.empty()) cfg.cache_dir = o.cache_dir;
  if (o.refresh_cache) cfg.refresh_cache = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weyl sums, ball discrepancy and variance of polynomial point sets on the torus"};
  app.set_version_flag("--version", std::string(TORUSQ_VERSION));
  app.require_subcommand(1);

  Overrides overrides;
  const std::vector<std::string> tasks = {"spectrum", "eta", "discrepancy", "variance", "shrink", "scaling"};
  for (const auto& name : tasks) add_experiment_flags(app.add_subcommand(name, "run the " + name + " task"), overrides);

  std::string plot_input, plot_kind, plot_out;
  auto* plot = app.add_subcommand("plot", "render a report as SVG");
  plot->add_option("input", plot_input, "report JSON or spectrum CSV")->required();
  plot->add_option("--kind", plot_kind, "loglog-scaling, deviation-vs-R or spectrum-heatmap")->required();
  plot->add_option("--out", plot_out, "output SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (plot->parsed()) {
      torusq::emit_plot(plot_input, torusq::parse_plot_kind(plot_kind), plot_out);
      return kOk;
    }
    const std::string task = app.get_subcommands().front()->get_name();
    const auto result = torusq::run_experiment(build_config(task, overrides));
    for (const auto& f : result.files) std::cout << f << '\n';
    return kOk;
  } catch (const torusq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const torusq::ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const torusq::BudgetError& e) {
    std::cerr << "budget exceeded: " << e.what() << '\n';
    return kBudget;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
