#pragma once

// Ball kernels on T^n and their Fourier coefficients.
//
//   K_R(x, y)   = 1 if |x - y| <= R
//   K+-(x, y)   = vol(B_{R+-rho}(x) n B_rho(y)) / vol(B_rho)
//
//   K_R^(v, y)  = R^{n/2} J_{n/2}(2 pi R |v|) |v|^{-n/2} e(-v.y)
//   K+-^(v, y)  = K_{R+-rho}^(v, y) K_rho^(v, 0) / vol(B_rho)

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "torusq/error.hpp"
#include "torusq/format.hpp"
#include "torusq/lattice.hpp"
#include "torusq/parallel.hpp"
#include "torusq/special.hpp"
#include "torusq/torus.hpp"
#include "torusq/weyl.hpp"

namespace torusq {

/// Ball radius R and smoothing radius rho with 0 < rho <= R/2, R + 2 rho < 1/2.
struct SmoothingParams {
  double radius;
  double smoothing;

  SmoothingParams(double r, double rho) : radius(r), smoothing(rho) {
    if (!(r > 0) || !(r < 0.5)) throw DomainError("ball radius must lie in (0, 1/2)");
    if (!(rho > 0) || !(rho <= r / 2)) throw DomainError("smoothing radius must lie in (0, R/2]");
    if (!(r + 2 * rho < 0.5)) throw DomainError("R + 2 rho must stay below 1/2");
  }

  double outer_radius(int sign) const { return sign > 0 ? radius + smoothing : radius - smoothing; }
};

enum class KernelKind { sharp, plus, minus };

inline const char* to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::sharp: return "sharp";
    case KernelKind::plus: return "plus";
    case KernelKind::minus: return "minus";
  }
  return "?";
}

/// e(-v.y) with the phase v.y mod 1 reduced exactly on y's denominator.
inline Complex character_at(std::span<const std::int64_t> v, const TorusPoint& y) {
  if (v.size() != y.dimension()) throw DomainError("frequency and point dimensions differ");
  const auto den = static_cast<__int128>(y.denominator);
  __int128 phase = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    phase = (phase + static_cast<__int128>(v[i]) % den * static_cast<__int128>(y.numerators[i])) % den;
  }
  if (phase < 0) phase += den;
  const long double angle = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>(phase) /
                            static_cast<long double>(y.denominator);
  return {static_cast<double>(std::cos(angle)), static_cast<double>(std::sin(angle))};
}

namespace detail {
inline double norm_of(std::span<const std::int64_t> v) {
  long double acc = 0;
  for (auto c : v) acc += static_cast<long double>(c) * static_cast<long double>(c);
  return static_cast<double>(std::sqrt(acc));
}

// R^{n/2} J_{n/2}(2 pi R t) t^{-n/2}, the radial part of the ball transform.
inline double ball_radial(std::size_t n, double r, double t) {
  const double half = static_cast<double>(n) / 2.0;
  return std::pow(r / t, half) * bessel_j(half, 2.0 * std::numbers::pi * r * t);
}
}  // namespace detail

/// Closed-form Fourier coefficients of K_R (sharp) or K+-_{R,rho}.
class KernelCoefficients {
 public:
  static KernelCoefficients sharp(std::size_t n, double radius) {
    if (!(radius > 0) || !(radius < 0.5)) throw DomainError("ball radius must lie in (0, 1/2)");
    return KernelCoefficients(KernelKind::sharp, n, radius, 0.0);
  }

  static KernelCoefficients smoothed(std::size_t n, const SmoothingParams& params, int sign) {
    return KernelCoefficients(sign > 0 ? KernelKind::plus : KernelKind::minus, n, params.radius, params.smoothing);
  }

  KernelKind kind() const noexcept { return kind_; }
  std::size_t n() const noexcept { return n_; }
  double radius() const noexcept { return radius_; }
  double smoothing() const noexcept { return smoothing_; }

  /// Radius of the outer ball: R, R + rho or R - rho.
  double effective_radius() const {
    switch (kind_) {
      case KernelKind::plus: return radius_ + smoothing_;
      case KernelKind::minus: return radius_ - smoothing_;
      default: return radius_;
    }
  }

  double at_zero() const { return ball_volume(n_, effective_radius()); }

  /// Coefficient modulus as a function of t = |v| (t = 0 gives at_zero()).
  double radial(double t) const {
    if (t == 0) return at_zero();
    const double outer = detail::ball_radial(n_, effective_radius(), t);
    if (kind_ == KernelKind::sharp) return outer;
    return outer * detail::ball_radial(n_, smoothing_, t) / ball_volume(n_, smoothing_);
  }

  Complex operator()(std::span<const std::int64_t> v, const TorusPoint& y) const {
    if (v.size() != n_) throw DomainError("frequency vector dimension mismatch");
    return radial(detail::norm_of(v)) * character_at(v, y);
  }

  /// A with |coefficient(v)| <= A |v|^{-(n+1)} for every v != 0 (smoothed
  /// kernels only), from |J_nu(x)| <= kBesselEnvelope x^{-1/2}.
  double decay_constant() const {
    if (kind_ == KernelKind::sharp) throw DomainError("the sharp kernel has no (n+1)-decay envelope");
    const double half = static_cast<double>(n_) / 2.0;
    if (half < 0.5 || half > kMaxEnvelopeOrder) throw DomainError("decay envelope is certified only for n <= 8");
    const double outer = effective_radius();
    const double prefactor = std::pow(outer, half) * std::pow(smoothing_, half) / ball_volume(n_, smoothing_);
    return prefactor * kBesselEnvelope * kBesselEnvelope / (2.0 * std::numbers::pi * std::sqrt(outer * smoothing_));
  }

 private:
  KernelCoefficients(KernelKind kind, std::size_t n, double radius, double smoothing)
      : kind_(kind), n_(n), radius_(radius), smoothing_(smoothing) {
    if (n == 0) throw DomainError("kernel dimension must be at least 1");
  }

  KernelKind kind_;
  std::size_t n_;
  double radius_;
  double smoothing_;
};

inline Complex khat_ball(std::size_t n, double radius, std::span<const std::int64_t> v, const TorusPoint& y) {
  return KernelCoefficients::sharp(n, radius)(v, y);
}

inline Complex khat_smoothed(std::size_t n, const SmoothingParams& params, int sign, std::span<const std::int64_t> v,
                             const TorusPoint& y) {
  return KernelCoefficients::smoothed(n, params, sign)(v, y);
}

inline int kernel_ball_pointwise(const TorusPoint& x, const TorusPoint& y, double radius) {
  if (!(radius > 0) || !(radius < 0.5)) throw DomainError("ball radius must lie in (0, 1/2)");
  if (const auto exact = exact_squared_distance(x, y)) {
    const long double r = radius;
    return exact->value() <= r * r ? 1 : 0;
  }
  return torus_distance(x, y) <= radius ? 1 : 0;
}

/// Volume of {z in B_r(0) : z_1 >= h}, signed offset h in [-r, r].
inline double cap_volume(std::size_t n, double r, double h) {
  if (h >= r) return 0.0;
  if (h <= -r) return ball_volume(n, r);
  const double full = ball_volume(n, r);
  const double t = 1.0 - (h * h) / (r * r);
  const double half_cap = 0.5 * full * boost::math::ibeta((static_cast<double>(n) + 1.0) / 2.0, 0.5, t);
  return h >= 0 ? half_cap : full - half_cap;
}

/// vol(B_r1(0) n B_r2(d e_1)) in R^n.
inline double ball_intersection_volume(std::size_t n, double r1, double r2, double d) {
  if (d >= r1 + r2) return 0.0;
  if (d <= std::fabs(r1 - r2)) return ball_volume(n, std::min(r1, r2));
  const double h1 = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
  return cap_volume(n, r1, h1) + cap_volume(n, r2, d - h1);
}

/// Normalized overlap vol(B_{R+-rho}(x) n B_rho(y)) / vol(B_rho) in [0, 1].
/// Plateaus are exact: plus is 1 for d <= R and 0 for d >= R + 2 rho; minus is
/// 1 for d <= R - 2 rho and 0 for d >= R.
inline double kernel_smoothed_pointwise(const TorusPoint& x, const TorusPoint& y, const SmoothingParams& params,
                                        int sign) {
  const double d = torus_distance(x, y);
  const double r = params.radius, rho = params.smoothing;
  if (sign > 0) {
    if (d <= r) return 1.0;
    if (d >= r + 2 * rho) return 0.0;
  } else {
    if (d <= r - 2 * rho) return 1.0;
    if (d >= r) return 0.0;
  }
  const std::size_t n = x.dimension();
  const double value = ball_intersection_volume(n, params.outer_radius(sign), rho, d) / ball_volume(n, rho);
  return std::clamp(value, 0.0, 1.0);
}

/// Smoothing radius R^{-(n-1)/(n+1)} p^{-2 min(eta,n)/(n+1)}, clamped to
/// (0, R/2] and strictly below (1/2 - R)/2.
inline double default_smoothing_radius(std::size_t n, double radius, std::uint64_t p, const EtaValue& eta) {
  const double nd = static_cast<double>(n);
  const double exponent = 2.0 * eta.capped(n) / (nd + 1.0);
  double rho = std::pow(radius, -(nd - 1.0) / (nd + 1.0)) * std::pow(static_cast<double>(p), -exponent);
  rho = std::min(rho, radius / 2.0);
  const double room = (0.5 - radius) / 2.0;
  while (rho > 0 && (rho >= room || radius + 2.0 * rho >= 0.5)) rho = std::nextafter(std::min(rho, room), 0.0);
  if (!(rho > 0)) throw DomainError("no admissible smoothing radius for this R");
  return rho;
}

// ---------------------------------------------------------------------------
// Truncated spectral expansion

struct SpectralResult {
  double value = 0;       // K^(0) + p^{-m} sum_{0<|v|<=V} K^(v,y) S_G(v), real part
  double imaginary = 0;   // residual imaginary part (should vanish)
  double tail_bound = 0;  // |true - value| <= tail_bound
  double cutoff = 0;
  std::uint64_t terms = 0;
};

struct SpectralOptions {
  double cutoff = 1;
  /// Throw when the tail bound exceeds this (infinity disables).
  double max_tail = std::numeric_limits<double>::infinity();
  EnumerationBudget budget{};
};

namespace detail {

/// Radial weights per integer shell k <= floor(V^2), evaluated in parallel.
template <class Radial>
std::vector<double> shell_table(std::uint64_t max_shell, Radial&& radial) {
  std::vector<double> table(max_shell + 1, 0.0);
  const auto chunks = parallel::make_chunks(table.size(), 1024);
  parallel::for_each_task(chunks.size(), [&](std::size_t c) {
    for (std::size_t k = chunks[c].begin; k < chunks[c].end; ++k) {
      table[k] = radial(std::sqrt(static_cast<double>(k)));
    }
  });
  return table;
}

/// Lattice points of |v| <= V grouped by first coordinate; each group is one
/// task and the partial sums are added in group order.
template <class Term>
Complex lattice_ball_sum(std::size_t n, const Band& band, Term&& term, std::uint64_t& terms) {
  const auto reach = static_cast<std::int64_t>(std::floor(std::sqrt(band.upper_sq)));
  const std::size_t groups = static_cast<std::size_t>(2 * reach + 1);
  std::vector<Complex> partial(groups);
  std::vector<std::uint64_t> counts(groups, 0);
  parallel::for_each_task(groups, [&](std::size_t g) {
    const std::int64_t first = static_cast<std::int64_t>(g) - reach;
    const auto first_sq = static_cast<std::uint64_t>(first * first);
    if (static_cast<double>(first_sq) > band.upper_sq) return;
    parallel::CompensatedSum<double> re, im;
    std::vector<std::int64_t> v(n);
    v[0] = first;
    const auto emit = [&](std::span<const std::int64_t> rest, std::uint64_t k) {
      std::copy(rest.begin(), rest.end(), v.begin() + 1);
      const std::uint64_t total = first_sq + k;
      if (static_cast<double>(total) <= band.lower_sq) return;
      const Complex t = term(std::span<const std::int64_t>(v), total);
      re.add(t.real());
      im.add(t.imag());
      ++counts[g];
    };
    if (n == 1) {
      emit(std::span<const std::int64_t>(), 0);
    } else {
      const Band rest = Band::from_squares(0, band.upper_sq - static_cast<double>(first_sq));
      // from_squares forbids negative lower edges; the origin of the slice is included by hand.
      emit(std::vector<std::int64_t>(n - 1, 0), 0);
      for_each_band_point(n - 1, rest, emit);
    }
    partial[g] = {re.value(), im.value()};
  });
  parallel::CompensatedSum<double> re, im;
  for (std::size_t g = 0; g < groups; ++g) {
    re.add(partial[g].real());
    im.add(partial[g].imag());
    terms += counts[g];
  }
  return {re.value(), im.value()};
}

}  // namespace detail

/// Envelope of the omitted terms |v| > V:
///   A [ M Z(V) + (1 - M) p^{-(n+1)} Z(V/p) ],
/// where A is the coefficient decay constant, M = max_{v not in pZ^n} |S|/p^m and
/// Z(a) bounds zeta_{n,a,inf}(n+1). Frequencies in pZ^n carry |S| = p^m.
inline double spectral_tail_bound(const WeylSpectrum& spectrum, double envelope, double cutoff) {
  const std::size_t n = spectrum.n();
  const double s = static_cast<double>(n) + 1.0;
  const double p = static_cast<double>(spectrum.p());
  const double weyl_max = std::min(1.0, spectrum.max_nontrivial().magnitude / spectrum.domain_size());
  return envelope * (weyl_max * zeta_tail_upper(n, cutoff, s) +
                     (1.0 - weyl_max) * std::pow(p, -s) * zeta_tail_upper(n, cutoff / p, s));
}

/// Truncated expansion of int K(x, y) d mu_G(x) over 0 < |v| <= V.
inline SpectralResult spectral_integral(const WeylSpectrum& spectrum, const KernelCoefficients& coeffs,
                                        const TorusPoint& y, const SpectralOptions& options) {
  if (coeffs.kind() == KernelKind::sharp) {
    throw DomainError("spectral_integral needs a smoothed kernel (the sharp expansion is not absolutely convergent)");
  }
  if (!(options.cutoff >= 1)) throw DomainError("spectral cutoff must be at least 1");
  const std::size_t n = spectrum.n();
  if (coeffs.n() != n || y.dimension() != n) throw DomainError("kernel, spectrum and center dimensions differ");
  const Band band = Band::from_radii(0, options.cutoff);
  if (band_point_estimate(n, band) > static_cast<double>(options.budget.max_items)) {
    throw BudgetError("spectral cutoff exceeds the enumeration budget");
  }
  SpectralResult result;
  result.cutoff = options.cutoff;
  result.tail_bound = spectral_tail_bound(spectrum, coeffs.decay_constant(), options.cutoff);
  if (result.tail_bound > options.max_tail) {
    throw DomainError("cutoff " + format_double(options.cutoff) + " leaves tail bound " +
                      format_double(result.tail_bound) + " above the requested tolerance");
  }
  const auto radial = detail::shell_table(band.last_shell(), [&](double t) { return coeffs.radial(t); });
  const double scale = spectrum.domain_size();
  const Complex sum = detail::lattice_ball_sum(
      n, band,
      [&](std::span<const std::int64_t> v, std::uint64_t k) {
        return radial[k] * character_at(v, y) * spectrum.at(v) / scale;
      },
      result.terms);
  result.value = coeffs.at_zero() + sum.real();
  result.imaginary = sum.imag();
  return result;
}

/// CSV rows v_1..v_n,re,im of K^(v, y) for the given frequencies.
inline void write_kernel_csv(std::ostream& out, const KernelCoefficients& coeffs, const TorusPoint& y,
                             const std::vector<std::vector<std::int64_t>>& frequencies) {
  for (std::size_t k = 0; k < coeffs.n(); ++k) out << "v_" << (k + 1) << ',';
  out << "re,im\n";
  for (const auto& v : frequencies) {
    const Complex c = coeffs(v, y);
    for (auto x : v) out << x << ',';
    out << format_double(c.real()) << ',' << format_double(c.imag()) << '\n';
  }
}

}  // namespace torusq
