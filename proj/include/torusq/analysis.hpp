#pragma once

// Ball deviations, per-center sup over radii, discrepancy estimates,
// shrinking-target ratios, variance (grid and Parseval) and log-log fits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "torusq/error.hpp"
#include "torusq/format.hpp"
#include "torusq/kernels.hpp"
#include "torusq/lattice.hpp"
#include "torusq/parallel.hpp"
#include "torusq/special.hpp"
#include "torusq/torus.hpp"
#include "torusq/weyl.hpp"

namespace torusq {

/// |mu_G(B) - vol(B)|.
inline double ball_deviation(const TorusCloud& cloud, const BallSpec& ball) {
  return std::fabs(measure_ball(cloud, ball).value() - ball_volume(cloud.n(), ball.radius));
}

/// Support points sorted by exact squared distance to one center, with
/// cumulative masses. Ties share one entry.
class RadialProfile {
 public:
  RadialProfile(const TorusCloud& cloud, const TorusPoint& center) : frame_(cloud.p(), center), n_(cloud.n()) {
    if (center.dimension() != cloud.n()) throw DomainError("center dimension mismatch");
    std::vector<std::pair<u128, std::uint64_t>> items;
    items.reserve(cloud.support_size());
    for (const auto& pt : cloud.points()) items.emplace_back(frame_.squared_numerator(pt.residues), pt.multiplicity);
    std::sort(items.begin(), items.end());
    std::uint64_t running = 0;
    for (std::size_t i = 0; i < items.size();) {
      std::size_t j = i;
      while (j < items.size() && items[j].first == items[i].first) running += items[j++].second;
      squared_.push_back(items[i].first);
      cumulative_.push_back(running);
      i = j;
    }
    total_ = cloud.total_mass();
  }

  std::size_t n() const noexcept { return n_; }
  std::uint64_t total() const noexcept { return total_; }
  const DistanceFrame& frame() const noexcept { return frame_; }
  const std::vector<u128>& squared_numerators() const noexcept { return squared_; }
  /// Mass at distance <= the i-th distinct distance.
  const std::vector<std::uint64_t>& cumulative() const noexcept { return cumulative_; }

  double distance(std::size_t i) const { return static_cast<double>(std::sqrt(frame_.to_squared_distance(squared_[i]))); }

  /// Mass in the closed ball of the given radius.
  std::uint64_t count_within(double radius) const {
    const auto it = std::partition_point(squared_.begin(), squared_.end(),
                                         [&](u128 num) { return frame_.within(num, radius); });
    const auto k = static_cast<std::size_t>(it - squared_.begin());
    return k == 0 ? 0 : cumulative_[k - 1];
  }

  double deviation(double radius) const {
    return std::fabs(static_cast<double>(count_within(radius)) / static_cast<double>(total_) - ball_volume(n_, radius));
  }

 private:
  DistanceFrame frame_;
  std::size_t n_;
  std::vector<u128> squared_;
  std::vector<std::uint64_t> cumulative_;
  std::uint64_t total_ = 1;
};

/// Maximizer of |mu_G(B_R(y)) - vol(B_R)| over R in (0, 1/2) for one center.
/// left_limit marks values attained as R -> radius from below.
struct RadiusSup {
  double radius = 0;
  bool left_limit = false;
  double deviation = 0;
};

inline RadiusSup sup_deviation_over_radii(const RadialProfile& profile) {
  const std::size_t n = profile.n();
  const double total = static_cast<double>(profile.total());
  const auto& sq = profile.squared_numerators();
  const auto& cum = profile.cumulative();
  const u128 den = profile.frame().denominator();
  const u128 half_sq_times4 = den * den;  // d < 1/2  <=>  4 num < den^2

  // R -> 0+: the ball holds exactly the mass at the center.
  const double at_center = (!sq.empty() && sq[0] == 0) ? static_cast<double>(cum[0]) : 0.0;
  RadiusSup best{0.0, false, at_center / total};
  const auto consider = [&](double radius, bool left, double value) {
    if (value > best.deviation) best = {radius, left, value};
  };
  std::uint64_t below = 0;  // mass strictly inside
  for (std::size_t i = 0; i < sq.size(); ++i) {
    if (sq[i] == 0) {
      below = cum[i];
      continue;
    }
    if (!(4 * sq[i] < half_sq_times4)) break;
    const double d = profile.distance(i);
    const double vol = ball_volume(n, d);
    consider(d, true, std::fabs(static_cast<double>(below) / total - vol));
    consider(d, false, std::fabs(static_cast<double>(cum[i]) / total - vol));
    below = cum[i];
  }
  consider(0.5, true, std::fabs(static_cast<double>(below) / total - ball_volume(n, 0.5)));
  return best;
}

inline RadiusSup sup_deviation_over_radii(const TorusCloud& cloud, const TorusPoint& center) {
  return sup_deviation_over_radii(RadialProfile(cloud, center));
}

// ---------------------------------------------------------------------------
// Center sets

enum class CenterKind { data, random, mixed };

struct CenterPolicy {
  CenterKind kind = CenterKind::mixed;
  std::size_t random_count = 0;
  std::uint64_t seed = 0;

  std::string describe() const {
    switch (kind) {
      case CenterKind::data: return "data";
      case CenterKind::random:
        return "random(M=" + std::to_string(random_count) + ",seed=" + std::to_string(seed) + ")";
      case CenterKind::mixed:
        return "mixed(M=" + std::to_string(random_count) + ",seed=" + std::to_string(seed) + ")";
    }
    return "?";
  }
};

/// Bits of sub-residue resolution for random centers.
inline constexpr unsigned kCenterFractionBits = 20;

namespace detail {
// Uniform integer in [0, range) by rejection, identical on every platform.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t range) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
  for (;;) {
    const std::uint64_t u = rng();
    if (u < limit) return u % range;
  }
}
}  // namespace detail

/// Uniform random centers on the grid (1 / (p 2^20)) Z^n.
inline std::vector<TorusPoint> random_centers(std::uint64_t p, std::size_t n, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::uint64_t den = p << kCenterFractionBits;
  std::vector<TorusPoint> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    TorusPoint c;
    c.denominator = den;
    for (std::size_t k = 0; k < n; ++k) c.numerators.push_back(detail::uniform_below(rng, den));
    out.push_back(std::move(c));
  }
  return out;
}

/// Support points (data), seeded random points, or both (data first).
inline std::vector<TorusPoint> make_centers(const TorusCloud& cloud, const CenterPolicy& policy) {
  std::vector<TorusPoint> centers;
  if (policy.kind != CenterKind::random) {
    for (const auto& pt : cloud.points()) centers.push_back(pt.point(cloud.p()));
  }
  if (policy.kind != CenterKind::data) {
    auto extra = random_centers(cloud.p(), cloud.n(), policy.random_count, policy.seed);
    centers.insert(centers.end(), extra.begin(), extra.end());
  }
  if (centers.empty()) throw DomainError("center policy produced no centers");
  return centers;
}

// ---------------------------------------------------------------------------
// Discrepancy

struct CenterDeviation {
  TorusPoint center;
  RadiusSup sup;
};

struct DiscrepancyReport {
  std::uint64_t prime = 0;
  std::string system;
  std::string centers;
  std::vector<CenterDeviation> rows;
  double estimate = 0;
  std::size_t argmax = 0;
  /// The estimate is a max over finitely many centers, hence a lower bound.
  bool lower_bound = true;
};

inline DiscrepancyReport discrepancy_estimate(const TorusCloud& cloud, const std::vector<TorusPoint>& centers,
                                              std::string system = {}, std::string descriptor = {}) {
  if (centers.empty()) throw DomainError("discrepancy_estimate needs at least one center");
  DiscrepancyReport report;
  report.prime = cloud.p();
  report.system = std::move(system);
  report.centers = std::move(descriptor);
  report.rows.resize(centers.size());
  parallel::for_each_task(centers.size(), [&](std::size_t i) {
    report.rows[i] = {centers[i], sup_deviation_over_radii(cloud, centers[i])};
  });
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    if (report.rows[i].sup.deviation > report.estimate || i == 0) {
      report.estimate = report.rows[i].sup.deviation;
      report.argmax = i;
    }
  }
  return report;
}

inline DiscrepancyReport discrepancy_estimate(const TorusCloud& cloud, const CenterPolicy& policy,
                                              std::string system = {}) {
  return discrepancy_estimate(cloud, make_centers(cloud, policy), std::move(system), policy.describe());
}

// ---------------------------------------------------------------------------
// Shrinking targets

/// Right-hand side of the two-branch deviation bound (without its constant):
/// p^{-e} for R <= p^{-e/n}, else R^{n(n-1)/(n+1)} p^{-2e/(n+1)}, e = min(eta, n).
inline double shrinking_target_bound(std::size_t n, double radius, std::uint64_t p, const EtaValue& eta) {
  const double nd = static_cast<double>(n), e = eta.capped(n), pd = static_cast<double>(p);
  if (radius <= std::pow(pd, -e / nd)) return std::pow(pd, -e);
  return std::pow(radius, nd * (nd - 1.0) / (nd + 1.0)) * std::pow(pd, -2.0 * e / (nd + 1.0));
}

inline double shrinking_branch_radius(std::size_t n, std::uint64_t p, const EtaValue& eta) {
  return std::pow(static_cast<double>(p), -eta.capped(n) / static_cast<double>(n));
}

struct ShrinkingRow {
  double radius = 0;
  std::size_t center = 0;
  double deviation = 0;
  double bound = 0;
  double ratio = 0;
};

struct ShrinkingTargetReport {
  std::uint64_t prime = 0;
  std::string system;
  EtaValue eta;
  double branch_radius = 0;
  std::vector<double> radii;
  std::vector<TorusPoint> centers;
  std::vector<ShrinkingRow> rows;  // radius-major
  double constant = 0;             // max ratio
};

inline ShrinkingTargetReport shrinking_target_check(const TorusCloud& cloud, const EtaValue& eta,
                                                    const std::vector<double>& radii,
                                                    const std::vector<TorusPoint>& centers, std::string system = {}) {
  if (radii.empty() || centers.empty()) throw DomainError("shrinking_target_check needs radii and centers");
  if (!eta.at_least && !(eta.value > 0)) throw DomainError("shrinking_target_check needs eta > 0");
  for (double r : radii) {
    if (!(r > 0) || !(r < 0.5)) throw DomainError("radii must lie in (0, 1/2)");
  }
  const std::size_t n = cloud.n();
  ShrinkingTargetReport report;
  report.prime = cloud.p();
  report.system = std::move(system);
  report.eta = eta;
  report.branch_radius = shrinking_branch_radius(n, cloud.p(), eta);
  report.radii = radii;
  report.centers = centers;
  std::vector<std::vector<double>> deviations(centers.size());
  parallel::for_each_task(centers.size(), [&](std::size_t c) {
    const RadialProfile profile(cloud, centers[c]);
    deviations[c].reserve(radii.size());
    for (double r : radii) deviations[c].push_back(profile.deviation(r));
  });
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const double bound = shrinking_target_bound(n, radii[k], cloud.p(), eta);
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double dev = deviations[c][k];
      report.rows.push_back({radii[k], c, dev, bound, dev / bound});
      report.constant = std::max(report.constant, dev / bound);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Variance

struct VarianceOptions {
  std::uint64_t grid = 200;
  /// > 0 switches to Monte Carlo over this many seeded uniform centers.
  std::uint64_t monte_carlo_samples = 0;
  std::uint64_t seed = 0;
  std::uint64_t max_grid_points = std::uint64_t{1} << 26;
};

/// Mean over the grid y = i/T (i in [0,T)^n) of (mu_G(B_R(y)) - vol(B_R))^2.
/// Ball counts on the grid are exact: each support point adds its
/// multiplicity to every grid center within R.
inline double variance_direct(const TorusCloud& cloud, double radius, const VarianceOptions& options = {}) {
  if (!(radius > 0) || !(radius < 0.5)) throw DomainError("ball radius must lie in (0, 1/2)");
  const std::size_t n = cloud.n();
  const double vol = ball_volume(n, radius);
  const double total = static_cast<double>(cloud.total_mass());

  if (options.monte_carlo_samples > 0) {
    const auto centers = random_centers(cloud.p(), n, options.monte_carlo_samples, options.seed);
    std::vector<double> values(centers.size());
    parallel::for_each_task(centers.size(), [&](std::size_t i) {
      const double mu = static_cast<double>(measure_ball(cloud, BallSpec(centers[i], radius)).count) / total;
      values[i] = (mu - vol) * (mu - vol);
    });
    parallel::CompensatedSum<double> sum;
    for (double v : values) sum.add(v);
    return sum.value() / static_cast<double>(values.size());
  }

  const std::uint64_t T = options.grid;
  if (T < 2) throw DomainError("variance grid must have T >= 2");
  const auto grid_points = checked_power(T, static_cast<unsigned>(n));
  if (!grid_points || *grid_points > options.max_grid_points) {
    throw BudgetError("variance grid T^n exceeds the configured budget");
  }
  const auto common = detail::lcm_checked(cloud.p(), T);
  if (!common) throw BudgetError("lcm(p, T) too large for exact grid distances");
  const std::uint64_t point_step = *common / cloud.p();
  const std::uint64_t grid_step = *common / T;
  const auto axis_delta = [&](std::uint64_t point_scaled, std::uint64_t index) {
    return detail::wrap_delta(point_scaled, index * grid_step, *common);
  };
  const std::uint64_t row_size = *grid_points / T;
  const long double common_sq = static_cast<long double>(*common) * static_cast<long double>(*common);
  const long double r_sq = static_cast<long double>(radius) * radius;
  const auto inside = [&](u128 num) { return static_cast<long double>(num) / common_sq <= r_sq; };
  const auto reach = static_cast<std::uint64_t>(std::ceil(radius * static_cast<double>(T))) + 1;

  std::vector<double> row_sums(T);
  parallel::for_each_task(T, [&](std::size_t row) {
    std::vector<std::uint64_t> counts(row_size, 0);
    std::vector<std::uint64_t> scaled(n);
    for (const auto& pt : cloud.points()) {
      for (std::size_t k = 0; k < n; ++k) scaled[k] = pt.residues[k] * point_step;
      const std::uint64_t d0 = axis_delta(scaled[0], row);
      const u128 first = static_cast<u128>(d0) * d0;
      if (!inside(first)) continue;
      // Visit the remaining axes over the window of grid indices around the point.
      const auto visit = [&](const auto& self, std::size_t axis, u128 partial, std::uint64_t offset) -> void {
        if (axis == n) {
          counts[offset] += pt.multiplicity;
          return;
        }
        const std::uint64_t home = static_cast<std::uint64_t>(static_cast<u128>(pt.residues[axis]) * T / cloud.p());
        const std::uint64_t span = std::min<std::uint64_t>(T, 2 * reach + 1);
        const std::uint64_t start = (home + T - std::min<std::uint64_t>(reach, T)) % T;
        for (std::uint64_t s = 0; s < span; ++s) {
          const std::uint64_t idx = (start + s) % T;
          const std::uint64_t d = axis_delta(scaled[axis], idx);
          const u128 next = partial + static_cast<u128>(d) * d;
          if (inside(next)) self(self, axis + 1, next, offset * T + idx);
        }
      };
      visit(visit, 1, first, 0);
    }
    parallel::CompensatedSum<double> sum;
    for (auto c : counts) {
      const double diff = static_cast<double>(c) / total - vol;
      sum.add(diff * diff);
    }
    row_sums[row] = sum.value();
  });
  parallel::CompensatedSum<double> sum;
  for (double v : row_sums) sum.add(v);
  return sum.value() / static_cast<double>(*grid_points);
}

struct SpectralVariance {
  double value = 0;
  double tail_bound = 0;
  double cutoff = 0;
  std::uint64_t terms = 0;
  std::optional<std::string> warning;
};

/// Parseval form R^n sum_{0<|v|<=V} J_{n/2}(2 pi R |v|)^2 |v|^{-n} |S_G(v)|^2 / p^{2m}
/// plus the bound R^{n-1} B^2 / (2 pi) [M^2 Z(V) + (1 - M^2) p^{-(n+1)} Z(V/p)]
/// on the omitted terms.
inline SpectralVariance variance_spectral(const WeylSpectrum& spectrum, double radius, double cutoff,
                                          const EnumerationBudget& budget = {}) {
  if (!(radius > 0) || !(radius < 0.5)) throw DomainError("ball radius must lie in (0, 1/2)");
  if (!(cutoff >= 1)) throw DomainError("spectral cutoff must be at least 1");
  const std::size_t n = spectrum.n();
  const double nd = static_cast<double>(n);
  if (nd / 2.0 > kMaxEnvelopeOrder) throw DomainError("variance tail bound is certified only for n <= 8");
  const Band band = Band::from_radii(0, cutoff);
  if (band_point_estimate(n, band) > static_cast<double>(budget.max_items)) {
    throw BudgetError("spectral cutoff exceeds the enumeration budget");
  }
  SpectralVariance out;
  out.cutoff = cutoff;
  if (cutoff < 1.0 / radius) out.warning = "cutoff below 1/R truncates the dominant shells";

  const auto radial = detail::shell_table(band.last_shell(), [&](double t) {
    if (t == 0) return 0.0;
    const double c = detail::ball_radial(n, radius, t);
    return c * c;
  });
  const double scale = spectrum.domain_size();
  const Complex sum = detail::lattice_ball_sum(
      n, band,
      [&](std::span<const std::int64_t> v, std::uint64_t k) {
        const double s = std::abs(spectrum.at(v)) / scale;
        return Complex(radial[k] * s * s, 0.0);
      },
      out.terms);
  out.value = sum.real();

  const double s = nd + 1.0;
  const double weyl_max = std::min(1.0, spectrum.max_nontrivial().magnitude / scale);
  const double m2 = weyl_max * weyl_max;
  const double envelope = std::pow(radius, nd - 1.0) * kBesselEnvelope * kBesselEnvelope / (2.0 * std::numbers::pi);
  out.tail_bound = envelope * (m2 * zeta_tail_upper(n, cutoff, s) +
                               (1.0 - m2) * std::pow(static_cast<double>(spectrum.p()), -s) *
                                   zeta_tail_upper(n, cutoff / static_cast<double>(spectrum.p()), s));
  return out;
}

struct VarianceReport {
  std::uint64_t prime = 0;
  std::string system;
  double radius = 0;
  std::uint64_t grid = 0;
  double direct = 0;
  double direct_coarse = 0;  // same at grid T/2
  double spectral = 0;
  double cutoff = 0;
  double tail_bound = 0;
  std::optional<std::string> warning;

  /// Grid self-convergence gap plus the spectral tail bound.
  double combined_error() const { return tail_bound + std::fabs(direct - direct_coarse); }
  double relative_gap() const { return std::fabs(direct - spectral) / std::max(direct, spectral); }
};

inline VarianceReport compare_variance(const TorusCloud& cloud, const WeylSpectrum& spectrum, double radius,
                                       std::uint64_t grid, double cutoff, std::string system = {}) {
  VarianceReport r;
  r.prime = cloud.p();
  r.system = std::move(system);
  r.radius = radius;
  r.grid = grid;
  VarianceOptions opts;
  opts.grid = grid;
  r.direct = variance_direct(cloud, radius, opts);
  opts.grid = std::max<std::uint64_t>(2, grid / 2);
  r.direct_coarse = variance_direct(cloud, radius, opts);
  const auto spec = variance_spectral(spectrum, radius, cutoff);
  r.spectral = spec.value;
  r.cutoff = cutoff;
  r.tail_bound = spec.tail_bound;
  r.warning = spec.warning;
  return r;
}

/// Var p^{min(2 eta, n)} / R^n.
inline double variance_constant(double variance, double radius, std::size_t n, std::uint64_t p, const EtaValue& eta) {
  const double nd = static_cast<double>(n);
  const double e = eta.at_least ? nd : std::min(2.0 * eta.value, nd);
  return variance * std::pow(static_cast<double>(p), e) / std::pow(radius, nd);
}

// ---------------------------------------------------------------------------
// Scaling fits

struct ScalingFit {
  std::vector<std::pair<double, double>> pairs;  // (p, value)
  double slope = 0;
  double intercept = 0;
  double residual = 0;  // Euclidean norm of log residuals
};

inline ScalingFit scaling_fit(std::vector<std::pair<double, double>> pairs) {
  if (pairs.size() < 3) throw DomainError("scaling_fit needs at least three pairs");
  const double count = static_cast<double>(pairs.size());
  double sx = 0, sy = 0;
  for (const auto& [x, y] : pairs) {
    if (!(x > 0) || !(y > 0)) throw DomainError("scaling_fit needs positive values");
    sx += std::log(x);
    sy += std::log(y);
  }
  const double mx = sx / count, my = sy / count;
  double sxx = 0, sxy = 0;
  for (const auto& [x, y] : pairs) {
    const double dx = std::log(x) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y) - my);
  }
  if (sxx == 0) throw DomainError("scaling_fit needs at least two distinct abscissae");
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0;
  for (const auto& [x, y] : pairs) {
    const double r = std::log(y) - (fit.intercept + fit.slope * std::log(x));
    rss += r * r;
  }
  fit.residual = std::sqrt(rss);
  fit.pairs = std::move(pairs);
  return fit;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json point_json(const TorusPoint& pt) {
  nlohmann::json coords = nlohmann::json::array();
  for (std::size_t i = 0; i < pt.dimension(); ++i) coords.push_back(pt.coord(i));
  return coords;
}

inline nlohmann::json to_json(const DiscrepancyReport& r) {
  const auto& best = r.rows.at(r.argmax);
  return {{"prime", r.prime},
          {"system", r.system},
          {"centers", r.centers},
          {"center_count", r.rows.size()},
          {"estimate", r.estimate},
          {"lower_bound", r.lower_bound},
          {"argmax_center", point_json(best.center)},
          {"argmax_radius", best.sup.radius},
          {"argmax_left_limit", best.sup.left_limit}};
}

inline void write_csv(std::ostream& out, const DiscrepancyReport& r) {
  const std::size_t n = r.rows.empty() ? 0 : r.rows.front().center.dimension();
  for (std::size_t k = 0; k < n; ++k) out << "y_" << (k + 1) << ',';
  out << "radius,side,deviation\n";
  for (const auto& row : r.rows) {
    for (std::size_t k = 0; k < n; ++k) out << format_double(row.center.coord(k)) << ',';
    out << format_double(row.sup.radius) << ',' << (row.sup.left_limit ? "left" : "at") << ','
        << format_double(row.sup.deviation) << '\n';
  }
}

inline nlohmann::json eta_json(const EtaValue& eta) {
  return eta.at_least ? nlohmann::json(eta.to_string()) : nlohmann::json(eta.value);
}

inline nlohmann::json to_json(const ShrinkingTargetReport& r) {
  nlohmann::json per_radius = nlohmann::json::array();
  const std::size_t centers = r.centers.size();
  for (std::size_t k = 0; k < r.radii.size(); ++k) {
    double dev = 0, ratio = 0;
    for (std::size_t c = 0; c < centers; ++c) {
      dev = std::max(dev, r.rows[k * centers + c].deviation);
      ratio = std::max(ratio, r.rows[k * centers + c].ratio);
    }
    per_radius.push_back({{"radius", r.radii[k]},
                          {"max_deviation", dev},
                          {"bound", r.rows[k * centers].bound},
                          {"max_ratio", ratio},
                          {"branch", r.radii[k] <= r.branch_radius ? "small" : "large"}});
  }
  return {{"prime", r.prime},          {"system", r.system},   {"eta", eta_json(r.eta)},
          {"branch_radius", r.branch_radius}, {"center_count", centers}, {"constant", r.constant},
          {"radii", std::move(per_radius)}};
}

inline void write_csv(std::ostream& out, const ShrinkingTargetReport& r) {
  out << "radius,center,deviation,bound,ratio\n";
  for (const auto& row : r.rows) {
    out << format_double(row.radius) << ',' << row.center << ',' << format_double(row.deviation) << ','
        << format_double(row.bound) << ',' << format_double(row.ratio) << '\n';
  }
}

inline nlohmann::json to_json(const VarianceReport& r) {
  nlohmann::json j{{"prime", r.prime},
                   {"system", r.system},
                   {"radius", r.radius},
                   {"grid", r.grid},
                   {"direct", r.direct},
                   {"direct_half_grid", r.direct_coarse},
                   {"spectral", r.spectral},
                   {"cutoff", r.cutoff},
                   {"tail_bound", r.tail_bound},
                   {"combined_error", r.combined_error()},
                   {"relative_gap", r.relative_gap()}};
  j["warning"] = r.warning ? nlohmann::json(*r.warning) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json to_json(const ScalingFit& fit) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [x, y] : fit.pairs) pairs.push_back({{"p", x}, {"value", y}});
  return {{"pairs", std::move(pairs)}, {"slope", fit.slope}, {"intercept", fit.intercept}, {"residual", fit.residual}};
}

inline void write_csv(std::ostream& out, const ScalingFit& fit) {
  out << "p,value\n";
  for (const auto& [x, y] : fit.pairs) out << format_double(x) << ',' << format_double(y) << '\n';
}

}  // namespace torusq
