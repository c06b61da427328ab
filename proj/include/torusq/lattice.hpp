#pragma once

// Lattice point counts r_n(k), R_n(K), band zeta sums
//
//   zeta_{n,a,b}(s) = sum_{v in Z^n, a < |v| <= b} |v|^{-s}
//
// and explicit upper bounds for the unbounded tails.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "torusq/error.hpp"
#include "torusq/parallel.hpp"
#include "torusq/special.hpp"
#include "torusq/weyl.hpp"

namespace torusq {

/// r_n(k) = #{v in Z^n : |v|^2 = k}.
inline std::uint64_t sum_of_squares(std::size_t n, std::uint64_t k) {
  if (n == 0) return k == 0 ? 1 : 0;
  if (n == 1) {
    if (k == 0) return 1;
    const auto r = static_cast<std::uint64_t>(std::llround(std::sqrt(static_cast<double>(k))));
    return r * r == k ? 2 : 0;
  }
  std::uint64_t total = sum_of_squares(n - 1, k);
  for (std::uint64_t x = 1; x * x <= k; ++x) total += 2 * sum_of_squares(n - 1, k - x * x);
  return total;
}

/// r_n(k) for every k in [0, max_k].
inline std::vector<std::uint64_t> sum_of_squares_table(std::size_t n, std::uint64_t max_k) {
  if (max_k > (std::uint64_t{1} << 32)) throw BudgetError("sum_of_squares_table: norm bound too large");
  std::vector<std::uint64_t> table(max_k + 1, 0);
  table[0] = 1;
  for (std::size_t dim = 0; dim < n; ++dim) {
    std::vector<std::uint64_t> next(max_k + 1, 0);
    for (std::uint64_t k = 0; k <= max_k; ++k) {
      if (table[k] == 0) continue;
      next[k] += table[k];
      for (std::uint64_t x = 1; k + x * x <= max_k; ++x) next[k + x * x] += 2 * table[k];
    }
    table = std::move(next);
  }
  return table;
}

/// R_n(K) = #{v in Z^n : |v|^2 <= K}.
inline std::uint64_t lattice_ball_count(std::size_t n, std::uint64_t max_norm_sq) {
  std::uint64_t total = 0;
  for (auto r : sum_of_squares_table(n, max_norm_sq)) total += r;
  return total;
}

/// Shell range a < |v| <= b stored as squared edges, so membership of the
/// integer shell k is the exact test lower_sq < k <= upper_sq.
struct Band {
  double lower_sq = 0;
  double upper_sq = 0;

  static Band from_squares(double lower_sq, double upper_sq) {
    if (!(lower_sq >= 0) || !(upper_sq >= lower_sq) || !std::isfinite(upper_sq)) {
      throw DomainError("band requires 0 <= a <= b < infinity");
    }
    return {lower_sq, upper_sq};
  }

  /// Squared radii within 1e-9 (relative) of an integer snap to it, so that
  /// e.g. b = sqrt(2) includes the shell k = 2.
  static Band from_radii(double a, double b) {
    if (!(a >= 0) || !(b >= a)) throw DomainError("band requires 0 <= a <= b");
    return from_squares(snap(a * a), snap(b * b));
  }

  std::uint64_t first_shell() const { return static_cast<std::uint64_t>(std::floor(lower_sq)) + 1; }
  std::uint64_t last_shell() const { return static_cast<std::uint64_t>(std::floor(upper_sq)); }

 private:
  static double snap(double x) {
    const double r = std::round(x);
    return std::fabs(x - r) <= 1e-9 * std::max(1.0, x) ? r : x;
  }
};

/// Caps the number of shells (zeta_band) or lattice points (zeta_weyl_band).
struct EnumerationBudget {
  std::uint64_t max_items = std::uint64_t{1} << 28;
};

/// Exact band sum over shells k in (a^2, b^2]: sum_k r_n(k) k^{-s/2}.
inline double zeta_band(std::size_t n, const Band& band, double s, const EnumerationBudget& budget = {}) {
  if (n == 0) throw DomainError("zeta_band requires n >= 1");
  const std::uint64_t first = band.first_shell(), last = band.last_shell();
  if (last < first) return 0.0;
  if (last > budget.max_items) throw BudgetError("zeta_band: shell count exceeds the enumeration budget");
  const auto r = sum_of_squares_table(n, last);
  parallel::CompensatedSum<double> sum;
  for (std::uint64_t k = first; k <= last; ++k) {
    if (r[k] != 0) sum.add(static_cast<double>(r[k]) * std::pow(static_cast<double>(k), -s / 2.0));
  }
  return sum.value();
}

namespace detail {

/// Calls fn(v, |v|^2) for every v in Z^n with lower_sq < |v|^2 <= upper_sq,
/// in lexicographic order of v.
template <class Fn>
void for_each_band_point(std::size_t n, const Band& band, Fn&& fn) {
  std::vector<std::int64_t> v(n, 0);
  const auto walk = [&](const auto& self, std::size_t depth, std::uint64_t partial) -> void {
    if (depth == n) {
      if (static_cast<double>(partial) > band.lower_sq) fn(std::span<const std::int64_t>(v), partial);
      return;
    }
    auto reach = static_cast<std::int64_t>(std::sqrt(std::max(0.0, band.upper_sq - static_cast<double>(partial))));
    while (static_cast<double>(partial + static_cast<std::uint64_t>((reach + 1) * (reach + 1))) <= band.upper_sq) ++reach;
    while (reach > 0 && static_cast<double>(partial + static_cast<std::uint64_t>(reach * reach)) > band.upper_sq) --reach;
    for (std::int64_t x = -reach; x <= reach; ++x) {
      v[depth] = x;
      self(self, depth + 1, partial + static_cast<std::uint64_t>(x * x));
    }
  };
  walk(walk, 0, 0);
}

}  // namespace detail

/// Volume upper estimate for the number of lattice points with |v| <= b.
inline double band_point_estimate(std::size_t n, const Band& band) {
  return ball_volume(n, std::sqrt(band.upper_sq) + std::sqrt(static_cast<double>(n)) / 2.0);
}

/// sum over a < |v| <= b of |S_G(v)|^c / p^{cm} |v|^{-s}, reading S_G(v) at v mod p.
inline double zeta_weyl_band(const WeylSpectrum& spectrum, const Band& band, double s, double c,
                             const EnumerationBudget& budget = {}) {
  if (!(c > 0)) throw DomainError("zeta_weyl_band requires c > 0");
  if (band_point_estimate(spectrum.n(), band) > static_cast<double>(budget.max_items)) {
    throw BudgetError("zeta_weyl_band: band exceeds the enumeration budget");
  }
  const double scale = spectrum.domain_size();
  parallel::CompensatedSum<double> sum;
  detail::for_each_band_point(spectrum.n(), band, [&](std::span<const std::int64_t> v, std::uint64_t k) {
    const double weight = std::pow(std::abs(spectrum.at(v)) / scale, c);
    if (weight != 0) sum.add(weight * std::pow(static_cast<double>(k), -s / 2.0));
  });
  return sum.value();
}

/// Upper bound for zeta_{n,a,infinity}(s), s > n, a >= 1.
///
/// Abel summation gives zeta = -R_n(a^2) a^{-s} + (s/2) int_{a^2}^inf R_n(t) t^{-s/2-1} dt.
/// Unit cubes around lattice points give V_n (sqrt(K) - h)_+^n <= R_n(K) <= V_n (sqrt(K) + h)^n
/// with h = sqrt(n)/2, hence
///
///   zeta <= V_n a^{n-s} [ s sum_j C(n,j) (h/a)^j / (s-n+j) - (1 - h/a)_+^n ],
///
/// which is decreasing in a and at most tail_bound_constant(n, s) a^{n-s}.
inline double tail_bound(std::size_t n, double a, double s) {
  const double nd = static_cast<double>(n);
  if (!(s > nd)) throw DomainError("tail_bound requires s > n");
  if (!(a >= 1)) throw DomainError("tail_bound requires a >= 1");
  const double h = std::sqrt(nd) / 2.0;
  double binom = 1.0, ratio_pow = 1.0, series = 0.0;
  for (std::size_t j = 0; j <= n; ++j) {
    series += binom * ratio_pow / (s - nd + static_cast<double>(j));
    binom = binom * static_cast<double>(n - j) / static_cast<double>(j + 1);
    ratio_pow *= h / a;
  }
  const double inner = std::max(0.0, 1.0 - h / a);
  return ball_volume(n, 1.0) * std::pow(a, nd - s) * (s * series - std::pow(inner, nd));
}

/// C(n, s) = s V_n sum_j C(n,j) h^j / (s-n+j), so tail_bound(n,a,s) <= C a^{n-s} for a >= 1.
inline double tail_bound_constant(std::size_t n, double s) {
  const double nd = static_cast<double>(n);
  if (!(s > nd)) throw DomainError("tail_bound requires s > n");
  const double h = std::sqrt(nd) / 2.0;
  double binom = 1.0, hp = 1.0, series = 0.0;
  for (std::size_t j = 0; j <= n; ++j) {
    series += binom * hp / (s - nd + static_cast<double>(j));
    binom = binom * static_cast<double>(n - j) / static_cast<double>(j + 1);
    hp *= h;
  }
  return s * ball_volume(n, 1.0) * series;
}

/// Upper bound for zeta_{n,a,infinity}(s) for any a >= 0. Below a = 1 the 2n
/// unit vectors are added exactly (no lattice point has 0 < |v| < 1).
inline double zeta_tail_upper(std::size_t n, double a, double s) {
  if (!(a >= 0)) throw DomainError("zeta_tail_upper requires a >= 0");
  if (a >= 1) return tail_bound(n, a, s);
  return 2.0 * static_cast<double>(n) + tail_bound(n, 1.0, s);
}

}  // namespace torusq
