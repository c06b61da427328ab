#pragma once

// Experiment orchestration: JSON configs, prime sweeps, cloud caching,
// report files and the run manifest.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "torusq/analysis.hpp"
#include "torusq/error.hpp"
#include "torusq/ffpoly.hpp"
#include "torusq/format.hpp"
#include "torusq/kernels.hpp"
#include "torusq/parallel.hpp"
#include "torusq/torus.hpp"
#include "torusq/weyl.hpp"

#ifndef TORUSQ_VERSION
#define TORUSQ_VERSION "0.0.0"
#endif

namespace torusq {

enum class Task { spectrum, eta, discrepancy, variance, shrink, scaling };

inline Task parse_task(const std::string& name) {
  if (name == "spectrum") return Task::spectrum;
  if (name == "eta") return Task::eta;
  if (name == "discrepancy") return Task::discrepancy;
  if (name == "variance") return Task::variance;
  if (name == "shrink" || name == "shrinking-target") return Task::shrink;
  if (name == "scaling") return Task::scaling;
  throw ConfigError("task", "unknown task '" + name + "'");
}

inline std::string task_name(Task task) {
  switch (task) {
    case Task::spectrum: return "spectrum";
    case Task::eta: return "eta";
    case Task::discrepancy: return "discrepancy";
    case Task::variance: return "variance";
    case Task::shrink: return "shrink";
    case Task::scaling: return "scaling";
  }
  return "?";
}

/// All primes in [from, to]; with count > 0, `count` of them at evenly
/// spaced indices (first and last included).
inline std::vector<std::uint64_t> primes_in_range(std::uint64_t from, std::uint64_t to, std::size_t count = 0) {
  std::vector<std::uint64_t> all;
  for (std::uint64_t q = std::max<std::uint64_t>(from, 2); q <= to; ++q) {
    if (is_prime(q)) all.push_back(q);
  }
  if (count == 0 || count >= all.size()) return all;
  if (count == 1) return {all.front()};
  std::vector<std::uint64_t> picked;
  const double step = static_cast<double>(all.size() - 1) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    picked.push_back(all[static_cast<std::size_t>(std::llround(step * static_cast<double>(i)))]);
  }
  return picked;
}

struct Budget {
  std::uint64_t max_table_entries = std::uint64_t{1} << 25;
  double max_seconds = 0;  // 0 = unlimited
};

struct ExperimentConfig {
  Task task = Task::eta;
  std::optional<BuiltinFamily> builtin;
  std::optional<std::string> system_text;
  std::vector<std::uint64_t> primes;
  std::vector<double> radii;
  std::optional<double> smoothing;  // unset = default rule
  CenterPolicy centers{CenterKind::mixed, 200, 0};
  std::uint64_t grid = 200;
  double cutoff = 100;
  std::optional<double> eta;  // unset = measured
  std::uint64_t monte_carlo = 0;
  std::optional<std::uint64_t> seed;
  Budget budget;
  std::string out = "out";
  unsigned threads = 0;
  std::string cache_dir;
  bool refresh_cache = false;

  /// Canonical JSON of every field that can change the numbers.
  nlohmann::json numeric_inputs() const {
    nlohmann::json j;
    j["task"] = task_name(task);
    if (builtin) j["builtin"] = builtin->to_string();
    if (system_text) j["system"] = to_text(parse_system(*system_text));
    j["primes"] = primes;
    j["radii"] = radii;
    j["rho"] = smoothing ? nlohmann::json(*smoothing) : nlohmann::json("default");
    j["centers"] = centers.describe();
    j["grid"] = grid;
    j["cutoff"] = cutoff;
    j["eta"] = eta ? nlohmann::json(*eta) : nlohmann::json("measured");
    j["monte_carlo"] = monte_carlo;
    j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
    j["max_table_entries"] = budget.max_table_entries;
    return j;
  }

  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : numeric_inputs().dump()) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    return h;
  }
};

inline std::vector<double> default_radii(Task task) {
  if (task == Task::variance) return {0.1, 0.25};
  if (task == Task::spectrum || task == Task::eta) return {};
  return {0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45};
}

namespace detail {

template <class T>
T config_get(const nlohmann::json& j, const char* field) {
  try {
    return j.at(field).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(field, std::string("invalid value: ") + e.what());
  }
}

inline bool is_count(const nlohmann::json& j) {
  return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
}

inline std::vector<std::uint64_t> parse_primes_json(const nlohmann::json& j) {
  if (is_count(j)) return {j.get<std::uint64_t>()};
  if (j.is_array()) {
    std::vector<std::uint64_t> out;
    for (const auto& e : j) {
      if (!is_count(e)) throw ConfigError("primes", "entries must be positive integers");
      out.push_back(e.get<std::uint64_t>());
    }
    return out;
  }
  if (j.is_object()) {
    const auto from = config_get<std::uint64_t>(j, "from");
    const auto to = config_get<std::uint64_t>(j, "to");
    const std::size_t count = j.contains("count") ? config_get<std::size_t>(j, "count") : 0;
    if (to < from) throw ConfigError("primes", "range end precedes its start");
    return primes_in_range(from, to, count);
  }
  throw ConfigError("primes", "expected an integer, a list or {from, to, count}");
}

}  // namespace detail

/// "5,13,29", "101..2003" or "101..2003:15".
inline std::vector<std::uint64_t> parse_prime_list(const std::string& text) {
  const auto dots = text.find("..");
  const auto to_u64 = [&](const std::string& s) {
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw ConfigError("primes", "cannot parse '" + s + "'");
    return v;
  };
  if (dots != std::string::npos) {
    const auto colon = text.find(':', dots);
    const auto from = to_u64(text.substr(0, dots));
    const auto to = to_u64(text.substr(dots + 2, colon == std::string::npos ? std::string::npos : colon - dots - 2));
    const std::size_t count = colon == std::string::npos ? 0 : to_u64(text.substr(colon + 1));
    if (to < from) throw ConfigError("primes", "range end precedes its start");
    return primes_in_range(from, to, count);
  }
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(to_u64(item));
  return out;
}

/// Checks cross-field rules; run after all overrides are applied.
inline void validate(ExperimentConfig& cfg) {
  if (cfg.builtin && cfg.system_text) throw ConfigError("system", "give either 'builtin' or 'system', not both");
  if (!cfg.builtin && !cfg.system_text) throw ConfigError("builtin", "a builtin family or a system is required");
  if (cfg.system_text) {
    PolynomialSystem g = [&] {
      try {
        return parse_system(*cfg.system_text);
      } catch (const Error& e) {
        throw ConfigError("system", e.what());
      }
    }();
    if (cfg.primes.empty()) cfg.primes = {g.p()};
    for (auto q : cfg.primes) {
      if (q != g.p()) throw ConfigError("primes", "an explicit system fixes p = " + std::to_string(g.p()));
    }
  }
  if (cfg.primes.empty()) throw ConfigError("primes", "no primes selected");
  for (auto q : cfg.primes) {
    if (!is_prime(q)) throw ConfigError("primes", std::to_string(q) + " is not prime");
    if (cfg.builtin) {
      try {
        (void)cfg.builtin->at(q);
      } catch (const Error& e) {
        throw ConfigError("builtin", e.what());
      }
    }
  }
  if (cfg.radii.empty()) cfg.radii = default_radii(cfg.task);
  for (double r : cfg.radii) {
    if (!(r > 0) || !(r < 0.5)) throw ConfigError("radii", "every radius must lie in (0, 1/2)");
  }
  if ((cfg.task == Task::variance || cfg.task == Task::shrink || cfg.task == Task::scaling) && cfg.radii.empty()) {
    throw ConfigError("radii", "this task needs at least one radius");
  }
  if (cfg.eta && !(*cfg.eta > 0)) throw ConfigError("eta", "eta must be positive or \"measured\"");
  if (cfg.grid < 2) throw ConfigError("grid", "grid must be at least 2");
  if (!(cfg.cutoff >= 1)) throw ConfigError("cutoff", "cutoff must be at least 1");
  const bool random = (cfg.centers.kind != CenterKind::data && cfg.centers.random_count > 0 &&
                       (cfg.task == Task::discrepancy || cfg.task == Task::shrink || cfg.task == Task::scaling)) ||
                      (cfg.task == Task::variance && cfg.monte_carlo > 0);
  if (random && !cfg.seed) throw ConfigError("seed", "a seed is required when random centers are used");
  if (cfg.seed) cfg.centers.seed = *cfg.seed;
  if (cfg.task == Task::scaling && cfg.primes.size() < 3) throw ConfigError("primes", "scaling needs at least 3 primes");
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
  static const std::vector<std::string> known = {
      "task", "builtin", "system", "primes", "radii", "rho", "centers", "grid", "cutoff", "eta",
      "monte_carlo", "seed", "budget", "out", "threads", "cache_dir", "refresh_cache"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError(key, "unknown field");
  }
  ExperimentConfig cfg;
  if (j.contains("task")) cfg.task = parse_task(detail::config_get<std::string>(j, "task"));
  if (j.contains("builtin")) {
    try {
      cfg.builtin = BuiltinFamily::parse(detail::config_get<std::string>(j, "builtin"));
    } catch (const DomainError& e) {
      throw ConfigError("builtin", e.what());
    }
  }
  if (j.contains("system")) cfg.system_text = detail::config_get<std::string>(j, "system");
  if (j.contains("primes")) cfg.primes = detail::parse_primes_json(j.at("primes"));
  if (j.contains("radii")) cfg.radii = detail::config_get<std::vector<double>>(j, "radii");
  if (j.contains("rho")) {
    const auto& rho = j.at("rho");
    if (rho.is_number()) {
      cfg.smoothing = rho.get<double>();
    } else if (!(rho.is_string() && rho.get<std::string>() == "default")) {
      throw ConfigError("rho", "expected a number or \"default\"");
    }
  }
  if (j.contains("centers")) {
    const auto& c = j.at("centers");
    if (!c.is_object()) throw ConfigError("centers", "expected {policy, count, seed}");
    const auto policy = c.value("policy", std::string("mixed"));
    if (policy == "data") {
      cfg.centers.kind = CenterKind::data;
    } else if (policy == "random") {
      cfg.centers.kind = CenterKind::random;
    } else if (policy == "mixed") {
      cfg.centers.kind = CenterKind::mixed;
    } else {
      throw ConfigError("centers", "unknown policy '" + policy + "'");
    }
    if (c.contains("count")) cfg.centers.random_count = detail::config_get<std::size_t>(c, "count");
    if (c.contains("seed")) cfg.seed = detail::config_get<std::uint64_t>(c, "seed");
  }
  if (j.contains("grid")) cfg.grid = detail::config_get<std::uint64_t>(j, "grid");
  if (j.contains("cutoff")) cfg.cutoff = detail::config_get<double>(j, "cutoff");
  if (j.contains("eta")) {
    const auto& e = j.at("eta");
    if (e.is_number()) {
      cfg.eta = e.get<double>();
    } else if (!(e.is_string() && e.get<std::string>() == "measured")) {
      throw ConfigError("eta", "expected a number or \"measured\"");
    }
  }
  if (j.contains("monte_carlo")) cfg.monte_carlo = detail::config_get<std::uint64_t>(j, "monte_carlo");
  if (j.contains("seed")) cfg.seed = detail::config_get<std::uint64_t>(j, "seed");
  if (j.contains("budget")) {
    const auto& b = j.at("budget");
    if (b.contains("max_table_entries")) cfg.budget.max_table_entries = detail::config_get<std::uint64_t>(b, "max_table_entries");
    if (b.contains("max_seconds")) cfg.budget.max_seconds = detail::config_get<double>(b, "max_seconds");
  }
  if (j.contains("out")) cfg.out = detail::config_get<std::string>(j, "out");
  if (j.contains("threads")) cfg.threads = detail::config_get<unsigned>(j, "threads");
  if (j.contains("cache_dir")) cfg.cache_dir = detail::config_get<std::string>(j, "cache_dir");
  if (j.contains("refresh_cache")) cfg.refresh_cache = detail::config_get<bool>(j, "refresh_cache");
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Running

struct RunResult {
  std::vector<std::string> files;  // relative to the output directory
  double wall_seconds = 0;
  std::uint64_t config_hash = 0;
};

class ExperimentRunner {
 public:
  explicit ExperimentRunner(ExperimentConfig cfg) : cfg_(std::move(cfg)) { validate(cfg_); }

  const ExperimentConfig& config() const noexcept { return cfg_; }

  RunResult run() {
    start_ = std::chrono::steady_clock::now();
    if (cfg_.threads > 0) parallel::set_threads(cfg_.threads);
    std::filesystem::create_directories(cfg_.out);
    switch (cfg_.task) {
      case Task::spectrum: run_spectrum(); break;
      case Task::eta: run_eta(); break;
      case Task::discrepancy: run_discrepancy(); break;
      case Task::variance: run_variance(); break;
      case Task::shrink: run_shrink(); break;
      case Task::scaling: run_scaling(); break;
    }
    result_.config_hash = cfg_.hash();
    result_.wall_seconds = elapsed();
    write_manifest();
    return result_;
  }

 private:
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  void check_time() const {
    if (cfg_.budget.max_seconds > 0 && elapsed() > cfg_.budget.max_seconds) {
      throw BudgetError("time budget of " + format_double(cfg_.budget.max_seconds) + " s exceeded");
    }
  }

  std::string system_id() const { return cfg_.builtin ? cfg_.builtin->to_string() : "custom"; }

  PolynomialSystem system_at(std::uint64_t p) const {
    return cfg_.builtin ? cfg_.builtin->at(p) : parse_system(*cfg_.system_text);
  }

  TableBudget table_budget() const { return TableBudget{cfg_.budget.max_table_entries}; }

  TorusCloud cloud_at(std::uint64_t p) const {
    const auto g = system_at(p);
    if (cfg_.cache_dir.empty()) return project_cloud(g);
    const auto hash = system_hash(g);
    std::filesystem::create_directories(cfg_.cache_dir);
    const auto path = (std::filesystem::path(cfg_.cache_dir) / (format_hex64(hash) + "_p" + std::to_string(p) + ".cloud")).string();
    if (!cfg_.refresh_cache) {
      if (auto cached = load_cloud_binary(path, hash, p)) return std::move(*cached);
    }
    auto cloud = project_cloud(g);
    save_cloud_binary(path, cloud, hash);
    return cloud;
  }

  EtaValue eta_at(std::uint64_t p, const WeylSpectrum* spectrum = nullptr) const {
    if (cfg_.eta) return EtaValue{*cfg_.eta, false};
    if (spectrum) return eta_from_spectrum(*spectrum).eta;
    return eta_from_spectrum(weyl_spectrum(system_at(p), table_budget())).eta;
  }

  void write_text(const std::string& name, const std::string& body) {
    const auto path = std::filesystem::path(cfg_.out) / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << body;
    result_.files.push_back(name);
  }

  void write_json(const std::string& name, const nlohmann::json& j) { write_text(name, j.dump(2) + "\n"); }

  template <class Writer>
  void write_csv_file(const std::string& name, Writer&& writer) {
    std::ostringstream ss;
    writer(ss);
    write_text(name, ss.str());
  }

  static std::string suffix(std::uint64_t p) { return "_p" + std::to_string(p); }

  void run_spectrum() {
    for (auto p : cfg_.primes) {
      const auto spectrum = weyl_spectrum(system_at(p), table_budget());
      write_csv_file("spectrum" + suffix(p) + ".csv", [&](std::ostream& o) { write_spectrum_csv(o, spectrum); });
      write_json("spectrum" + suffix(p) + ".json", to_json(eta_from_spectrum(spectrum)));
      check_time();
    }
  }

  void run_eta() {
    EtaReport report;
    report.family = system_id();
    for (auto p : cfg_.primes) {
      report.entries.push_back(eta_from_spectrum(weyl_spectrum(system_at(p), table_budget())));
      check_time();
    }
    report.minimum = minimum_eta(report.entries);
    write_json("eta.json", to_json(report));
  }

  DiscrepancyReport discrepancy_at(std::uint64_t p) {
    const auto cloud = cloud_at(p);
    return discrepancy_estimate(cloud, cfg_.centers, system_id());
  }

  void run_discrepancy() {
    nlohmann::json summary = nlohmann::json::array();
    for (auto p : cfg_.primes) {
      const auto report = discrepancy_at(p);
      write_json("discrepancy" + suffix(p) + ".json", to_json(report));
      write_csv_file("discrepancy" + suffix(p) + ".csv", [&](std::ostream& o) { write_csv(o, report); });
      summary.push_back({{"prime", p}, {"estimate", report.estimate}});
      check_time();
    }
    write_json("discrepancy.json", {{"system", system_id()}, {"centers", cfg_.centers.describe()}, {"primes", summary}});
  }

  void run_variance() {
    std::ostringstream csv;
    csv << "p,radius,direct,direct_half_grid,spectral,tail_bound,constant\n";
    for (auto p : cfg_.primes) {
      const auto cloud = cloud_at(p);
      const auto spectrum = weyl_spectrum(system_at(p), table_budget());
      const auto eta = eta_at(p, &spectrum);
      nlohmann::json reports = nlohmann::json::array();
      for (double r : cfg_.radii) {
        VarianceReport rep;
        if (cfg_.monte_carlo > 0) {
          VarianceOptions opts;
          opts.monte_carlo_samples = cfg_.monte_carlo;
          opts.seed = *cfg_.seed;
          rep.prime = p;
          rep.system = system_id();
          rep.radius = r;
          rep.direct = rep.direct_coarse = variance_direct(cloud, r, opts);
          const auto spec = variance_spectral(spectrum, r, cfg_.cutoff);
          rep.spectral = spec.value;
          rep.cutoff = cfg_.cutoff;
          rep.tail_bound = spec.tail_bound;
          rep.warning = spec.warning;
        } else {
          rep = compare_variance(cloud, spectrum, r, cfg_.grid, cfg_.cutoff, system_id());
        }
        auto j = to_json(rep);
        const double c = variance_constant(rep.direct, r, cloud.n(), p, eta);
        j["constant"] = c;
        j["eta"] = eta_json(eta);
        reports.push_back(std::move(j));
        csv << p << ',' << format_double(r) << ',' << format_double(rep.direct) << ','
            << format_double(rep.direct_coarse) << ',' << format_double(rep.spectral) << ','
            << format_double(rep.tail_bound) << ',' << format_double(c) << '\n';
        check_time();
      }
      write_json("variance" + suffix(p) + ".json", reports);
    }
    write_text("variance.csv", csv.str());
  }

  ShrinkingTargetReport shrink_at(std::uint64_t p, const TorusCloud& cloud) {
    return shrinking_target_check(cloud, eta_at(p), cfg_.radii, make_centers(cloud, cfg_.centers), system_id());
  }

  void run_shrink() {
    nlohmann::json summary = nlohmann::json::array();
    for (auto p : cfg_.primes) {
      const auto cloud = cloud_at(p);
      const auto report = shrink_at(p, cloud);
      write_json("shrink" + suffix(p) + ".json", to_json(report));
      write_csv_file("shrink" + suffix(p) + ".csv", [&](std::ostream& o) { write_csv(o, report); });
      summary.push_back({{"prime", p}, {"constant", report.constant}});
      check_time();
    }
    write_json("shrink.json", {{"system", system_id()}, {"primes", summary}});
  }

  void run_scaling() {
    std::vector<std::pair<double, double>> pairs;
    std::vector<double> constants;
    std::ostringstream csv;
    csv << "p,discrepancy,shrink_constant\n";
    for (auto p : cfg_.primes) {
      const auto cloud = cloud_at(p);
      const auto centers = make_centers(cloud, cfg_.centers);
      const auto disc = discrepancy_estimate(cloud, centers, system_id(), cfg_.centers.describe());
      const auto shrink = shrinking_target_check(cloud, eta_at(p), cfg_.radii, centers, system_id());
      pairs.emplace_back(static_cast<double>(p), disc.estimate);
      constants.push_back(shrink.constant);
      csv << p << ',' << format_double(disc.estimate) << ',' << format_double(shrink.constant) << '\n';
      check_time();
    }
    const auto fit = scaling_fit(pairs);
    const auto [lo, hi] = std::minmax_element(constants.begin(), constants.end());
    write_json("scaling.json", {{"system", system_id()},
                                {"centers", cfg_.centers.describe()},
                                {"fit", to_json(fit)},
                                {"shrink_constants", constants},
                                {"shrink_constant_ratio", *hi / *lo}});
    write_text("scaling.csv", csv.str());
  }

  void write_manifest() {
    nlohmann::json files = nlohmann::json::array();
    for (const auto& name : result_.files) {
      std::ifstream in(std::filesystem::path(cfg_.out) / name, std::ios::binary);
      std::ostringstream body;
      body << in.rdbuf();
      std::uint64_t h = 0xcbf29ce484222325ull;
      for (unsigned char c : body.str()) {
        h ^= c;
        h *= 0x100000001b3ull;
      }
      files.push_back({{"name", name}, {"bytes", body.str().size()}, {"fnv1a64", format_hex64(h)}});
    }
    nlohmann::json manifest{{"config_hash", format_hex64(result_.config_hash)},
                            {"inputs", cfg_.numeric_inputs()},
                            {"version", TORUSQ_VERSION},
                            {"files", std::move(files)},
                            {"wall_seconds", result_.wall_seconds},
                            {"threads", parallel::threads()}};
    const auto path = std::filesystem::path(cfg_.out) / "manifest.json";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << manifest.dump(2) << '\n';
  }

  ExperimentConfig cfg_;
  RunResult result_;
  std::chrono::steady_clock::time_point start_;
};

inline RunResult run_experiment(ExperimentConfig cfg) { return ExperimentRunner(std::move(cfg)).run(); }

}  // namespace torusq
