#pragma once

// Gamma and Bessel J_nu for the small orders that appear as n/2, n/2 +- 1.

#include <cmath>
#include <limits>
#include <numbers>

#include "torusq/error.hpp"
#include "torusq/parallel.hpp"

namespace torusq {

/// Gamma(x) for x > 0. Integers and half-integers use exact recursions from
/// Gamma(1) = 1 and Gamma(1/2) = sqrt(pi); other arguments use std::tgamma.
inline double gamma_fn(double x) {
  if (!(x > 0)) throw DomainError("gamma_fn requires a positive argument");
  const double twice = 2.0 * x;
  if (twice == std::floor(twice) && x <= 170.0) {
    const bool half = std::fmod(twice, 2.0) != 0.0;
    long double acc = half ? std::sqrt(std::numbers::pi_v<long double>) : 1.0L;
    for (double t = half ? 0.5 : 1.0; t < x; t += 1.0) acc *= t;
    return static_cast<double>(acc);
  }
  return std::tgamma(x);
}

/// Volume of the Euclidean n-ball of radius r: pi^{n/2} r^n / Gamma(n/2 + 1).
inline double ball_volume(std::size_t n, double r) {
  if (r < 0) throw DomainError("ball_volume requires a non-negative radius");
  const double nd = static_cast<double>(n);
  return std::pow(std::numbers::pi, nd / 2.0) * std::pow(r, nd) / gamma_fn(nd / 2.0 + 1.0);
}

namespace detail {

inline double bessel_series(double nu, double x) {
  const long double half = static_cast<long double>(x) / 2.0L;
  const long double q = -half * half;
  long double term = 1.0L / std::tgamma(static_cast<long double>(nu) + 1.0L);
  parallel::CompensatedSum<long double> sum;
  sum.add(term);
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<long double>(k) * (static_cast<long double>(nu) + k));
    sum.add(term);
    if (static_cast<long double>(k) > half && std::fabs(term) < 1e-22L * std::fabs(sum.value())) break;
  }
  return static_cast<double>(sum.value() * std::pow(half, static_cast<long double>(nu)));
}

// Hankel expansion J ~ sqrt(2/(pi x)) (P cos w - Q sin w), w = x - (nu/2 + 1/4) pi.
inline double bessel_asymptotic(double nu, double x) {
  const double mu = 4.0 * nu * nu;
  double p = 1.0, q = 0.0;
  double t = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = t * (mu - odd * odd) / (8.0 * k * x);
    if (next == 0.0) break;
    if (k > 2 && std::fabs(next) > std::fabs(t)) break;
    t = next;
    const double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
    if (k % 2 == 0) {
      p += sign * t;
    } else {
      q += sign * t;
    }
    if (std::fabs(t) < 1e-18) break;
  }
  const double phi = (nu / 2.0 + 0.25) * std::numbers::pi;
  const double cx = std::cos(x), sx = std::sin(x);
  const double cphi = std::cos(phi), sphi = std::sin(phi);
  const double cw = cx * cphi + sx * sphi;
  const double sw = sx * cphi - cx * sphi;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * cw - q * sw);
}

}  // namespace detail

/// Argument above which the asymptotic expansion replaces the power series.
inline double bessel_crossover(double nu) { return 15.0 + std::fabs(nu); }

/// J_nu(x) for nu >= -1/2 and x >= 0.
inline double bessel_j(double nu, double x) {
  if (nu < -0.5) throw DomainError("bessel_j requires nu >= -1/2");
  if (x < 0) throw DomainError("bessel_j requires x >= 0");
  if (x == 0) {
    if (nu == 0) return 1.0;
    return nu > 0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return x < bessel_crossover(nu) ? detail::bessel_series(nu, x) : detail::bessel_asymptotic(nu, x);
}

/// Largest order for which the x^{-1/2} envelope constant below is verified.
inline constexpr double kMaxEnvelopeOrder = 4.0;

/// |J_nu(x)| <= kBesselEnvelope * x^{-1/2} for 1/2 <= nu <= kMaxEnvelopeOrder
/// and all x > 0 (sup of sqrt(x)|J_nu(x)| is 1/sqrt(pi/2) at nu = 1/2 and
/// grows slowly, staying below 0.93 up to nu = 4).
inline constexpr double kBesselEnvelope = 1.0;

/// Pointwise bound min((x/2)^nu / Gamma(nu+1), x^{-1/2}) on |J_nu(x)|.
inline double bessel_bound(double nu, double x) {
  if (nu < 0.5 || nu > kMaxEnvelopeOrder) throw DomainError("bessel_bound is only certified for 1/2 <= nu <= 4");
  if (x <= 0) return nu == 0 ? 1.0 : 0.0;
  const double small = std::pow(x / 2.0, nu) / gamma_fn(nu + 1.0);
  return std::min(small, kBesselEnvelope / std::sqrt(x));
}

}  // namespace torusq
