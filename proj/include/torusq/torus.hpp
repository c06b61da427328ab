#pragma once

// The multiset A_G = {G(x)/p : x in F_p^m} on T^n = (R/Z)^n, the wraparound
// Euclidean metric, closed-ball counting and integration against mu_G.
//
// Points are stored as integer residues; centers are rationals with an
// integer denominator. Distances between the two are evaluated on the common
// denominator, so squared distances are exact integers and ties at radius
// boundaries are resolved identically on every run.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "torusq/error.hpp"
#include "torusq/ffpoly.hpp"
#include "torusq/format.hpp"
#include "torusq/parallel.hpp"
#include "torusq/special.hpp"

namespace torusq {

using u128 = unsigned __int128;
using Complex = std::complex<double>;

/// Denominator used when a real coordinate is converted to a TorusPoint.
inline constexpr std::uint64_t kRealDenominator = std::uint64_t{1} << 32;

/// A point of T^n with coordinates numerators[i] / denominator in [0, 1).
struct TorusPoint {
  std::vector<std::uint64_t> numerators;
  std::uint64_t denominator = 1;

  std::size_t dimension() const noexcept { return numerators.size(); }
  double coord(std::size_t i) const {
    return static_cast<double>(static_cast<long double>(numerators[i]) / static_cast<long double>(denominator));
  }
  std::vector<double> coords() const {
    std::vector<double> out(dimension());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = coord(i);
    return out;
  }

  static TorusPoint from_residues(std::span<const Residue> residues, std::uint64_t p) {
    TorusPoint pt;
    pt.denominator = p;
    for (auto r : residues) {
      if (r >= p) throw DomainError("residue outside [0, p)");
      pt.numerators.push_back(r);
    }
    return pt;
  }

  /// Rounds each coordinate (taken mod 1) to the nearest multiple of 1/denominator.
  static TorusPoint from_reals(std::span<const double> coords, std::uint64_t denominator = kRealDenominator) {
    TorusPoint pt;
    pt.denominator = denominator;
    for (double c : coords) {
      if (!std::isfinite(c)) throw DomainError("torus coordinate must be finite");
      const long double frac = static_cast<long double>(c) - std::floor(static_cast<long double>(c));
      auto num = static_cast<std::uint64_t>(std::llround(frac * static_cast<long double>(denominator)));
      if (num >= denominator) num -= denominator;
      pt.numerators.push_back(num);
    }
    return pt;
  }

  friend bool operator==(const TorusPoint&, const TorusPoint&) = default;
};

namespace detail {

inline std::uint64_t wrap_delta(std::uint64_t a, std::uint64_t b, std::uint64_t modulus) {
  const std::uint64_t d = a > b ? a - b : b - a;
  return std::min(d, modulus - d);
}

inline constexpr std::uint64_t kMaxCommonDenominator = std::uint64_t{1} << 60;

inline std::optional<std::uint64_t> lcm_checked(std::uint64_t a, std::uint64_t b) {
  const std::uint64_t g = std::gcd(a, b);
  const std::uint64_t q = a / g;
  if (q != 0 && b > kMaxCommonDenominator / q) return std::nullopt;
  return q * b;
}

}  // namespace detail

/// Squared distance num / denominator^2 on a common denominator.
struct ExactSquaredDistance {
  u128 numerator = 0;
  std::uint64_t denominator = 1;

  long double value() const {
    const long double d = static_cast<long double>(denominator);
    return static_cast<long double>(numerator) / (d * d);
  }
};

/// Exact squared torus distance when the two denominators have a common
/// multiple below 2^60; nullopt otherwise.
inline std::optional<ExactSquaredDistance> exact_squared_distance(const TorusPoint& x, const TorusPoint& y) {
  if (x.dimension() != y.dimension()) throw DomainError("torus points have different dimensions");
  const auto common = detail::lcm_checked(x.denominator, y.denominator);
  if (!common) return std::nullopt;
  const std::uint64_t sx = *common / x.denominator, sy = *common / y.denominator;
  ExactSquaredDistance out{0, *common};
  for (std::size_t i = 0; i < x.dimension(); ++i) {
    const u128 d = detail::wrap_delta(x.numerators[i] * sx, y.numerators[i] * sy, *common);
    out.numerator += d * d;
  }
  return out;
}

/// Euclidean norm of the coordinate-wise minimal representative of x - y.
inline double torus_distance(const TorusPoint& x, const TorusPoint& y) {
  if (const auto exact = exact_squared_distance(x, y)) return static_cast<double>(std::sqrt(exact->value()));
  long double acc = 0;
  for (std::size_t i = 0; i < x.dimension(); ++i) {
    long double d = std::fabs(static_cast<long double>(x.coord(i)) - y.coord(i));
    d = std::min(d, 1.0L - d);
    acc += d * d;
  }
  return static_cast<double>(std::sqrt(acc));
}

/// Real-coordinate variant: delta_i = min(|x_i - y_i|, 1 - |x_i - y_i|) after
/// reducing each coordinate mod 1.
inline double torus_distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("torus points have different dimensions");
  double acc = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = std::fabs((x[i] - std::floor(x[i])) - (y[i] - std::floor(y[i])));
    d = std::min(d, 1.0 - d);
    acc += d * d;
  }
  return std::sqrt(acc);
}

/// Closed geodesic ball {x : d(x, center) <= radius} with 0 < radius < 1/2.
struct BallSpec {
  TorusPoint center;
  double radius;

  BallSpec(TorusPoint c, double r) : center(std::move(c)), radius(r) {
    if (!(r > 0) || !(r < 0.5)) throw DomainError("ball radius must lie in (0, 1/2)");
  }
};

struct CloudPoint {
  std::vector<Residue> residues;
  std::uint64_t multiplicity = 0;

  TorusPoint point(std::uint64_t p) const { return TorusPoint::from_residues(residues, p); }
  friend bool operator==(const CloudPoint&, const CloudPoint&) = default;
};

/// Weighted point multiset on T^n with coordinates residue / p. Points are
/// kept sorted by residues with merged duplicates.
class TorusCloud {
 public:
  TorusCloud(std::uint64_t p, std::size_t m, std::size_t n, std::vector<CloudPoint> points)
      : p_(p), m_(m), n_(n) {
    if (p < 2) throw DomainError("cloud modulus must be at least 2");
    if (n < 1) throw DomainError("cloud dimension must be at least 1");
    std::sort(points.begin(), points.end(),
              [](const CloudPoint& a, const CloudPoint& b) { return a.residues < b.residues; });
    for (auto& pt : points) {
      if (pt.residues.size() != n) throw DomainError("cloud point dimension mismatch");
      for (auto r : pt.residues) {
        if (r >= p) throw DomainError("cloud residue outside [0, p)");
      }
      if (pt.multiplicity == 0) continue;
      if (!points_.empty() && points_.back().residues == pt.residues) {
        points_.back().multiplicity += pt.multiplicity;
      } else {
        points_.push_back(std::move(pt));
      }
    }
    for (const auto& pt : points_) total_ += pt.multiplicity;
    if (total_ == 0) throw DomainError("cloud has no mass");
  }

  std::uint64_t p() const noexcept { return p_; }
  std::size_t m() const noexcept { return m_; }
  std::size_t n() const noexcept { return n_; }
  const std::vector<CloudPoint>& points() const noexcept { return points_; }
  std::size_t support_size() const noexcept { return points_.size(); }
  /// Sum of multiplicities (p^m for a projected cloud).
  std::uint64_t total_mass() const noexcept { return total_; }

  TorusCloud scaled(std::uint64_t k) const {
    auto pts = points_;
    for (auto& pt : pts) pt.multiplicity *= k;
    return TorusCloud(p_, m_, n_, std::move(pts));
  }

  /// Shifts every point by shift / p.
  TorusCloud translated(std::span<const Residue> shift) const {
    if (shift.size() != n_) throw DomainError("shift dimension mismatch");
    auto pts = points_;
    for (auto& pt : pts) {
      for (std::size_t i = 0; i < n_; ++i) pt.residues[i] = (pt.residues[i] + shift[i] % p_) % p_;
    }
    return TorusCloud(p_, m_, n_, std::move(pts));
  }

  friend bool operator==(const TorusCloud&, const TorusCloud&) = default;

 private:
  std::uint64_t p_;
  std::size_t m_;
  std::size_t n_;
  std::vector<CloudPoint> points_;
  std::uint64_t total_ = 0;
};

/// Projects every x in F_p^m to G(x)/p and collects multiplicities.
inline TorusCloud project_cloud(const PolynomialSystem& g, std::uint64_t max_points = std::uint64_t{1} << 26) {
  const std::uint64_t p = g.p();
  const std::size_t n = g.num_polys();
  const DomainEnumerator domain(g.modulus(), g.num_vars());
  if (domain.size() > max_points) {
    throw BudgetError("p^m = " + std::to_string(domain.size()) + " points exceed the cap of " +
                      std::to_string(max_points));
  }
  if (!checked_power(p, static_cast<unsigned>(n))) throw BudgetError("p^n does not fit in 64 bits");
  const auto chunks = domain.chunks(std::uint64_t{1} << 15);
  std::vector<std::vector<std::uint64_t>> codes(chunks.size());
  parallel::for_each_task(chunks.size(), [&](std::size_t c) {
    std::vector<Residue> values(n);
    auto& out = codes[c];
    out.reserve(chunks[c].second - chunks[c].first);
    domain.for_each(chunks[c].first, chunks[c].second, [&](std::uint64_t, std::span<const Residue> x) {
      eval_system_into(g, x, values);
      std::uint64_t code = 0;
      for (auto r : values) code = code * p + r;
      out.push_back(code);
    });
  });
  std::vector<std::uint64_t> all;
  all.reserve(domain.size());
  for (auto& c : codes) all.insert(all.end(), c.begin(), c.end());
  codes.clear();
  std::sort(all.begin(), all.end());
  std::vector<CloudPoint> points;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j] == all[i]) ++j;
    CloudPoint pt{std::vector<Residue>(n), j - i};
    std::uint64_t code = all[i];
    for (std::size_t k = n; k-- > 0;) {
      pt.residues[k] = code % p;
      code /= p;
    }
    points.push_back(std::move(pt));
    i = j;
  }
  return TorusCloud(p, g.num_vars(), n, std::move(points));
}

// ---------------------------------------------------------------------------
// Ball counting

/// Distances from one center to residue points, on a common denominator.
class DistanceFrame {
 public:
  DistanceFrame(std::uint64_t p, const TorusPoint& center) {
    TorusPoint c = center;
    auto common = detail::lcm_checked(p, c.denominator);
    if (!common) {
      // Snap the center onto the finest grid compatible with p.
      std::uint64_t den = p;
      while (den <= detail::kMaxCommonDenominator / 2) den *= 2;
      c = TorusPoint::from_reals(center.coords(), den);
      common = den;
    }
    common_ = *common;
    point_scale_ = common_ / p;
    const std::uint64_t cs = common_ / c.denominator;
    for (auto num : c.numerators) center_.push_back(num * cs);
  }

  std::uint64_t denominator() const noexcept { return common_; }
  std::size_t dimension() const noexcept { return center_.size(); }

  u128 squared_numerator(std::span<const Residue> residues) const {
    u128 acc = 0;
    for (std::size_t i = 0; i < center_.size(); ++i) {
      const u128 d = detail::wrap_delta(residues[i] * point_scale_, center_[i], common_);
      acc += d * d;
    }
    return acc;
  }

  long double to_squared_distance(u128 numerator) const {
    const long double d = static_cast<long double>(common_);
    return static_cast<long double>(numerator) / (d * d);
  }

  /// Closed-ball test d <= radius, compared in extended precision.
  bool within(u128 numerator, double radius) const {
    const long double r = radius;
    return to_squared_distance(numerator) <= r * r;
  }

 private:
  std::uint64_t common_ = 1;
  std::uint64_t point_scale_ = 1;
  std::vector<std::uint64_t> center_;
};

/// count / total = mu_G(B).
struct BallMeasure {
  std::uint64_t count = 0;
  std::uint64_t total = 1;
  double value() const { return static_cast<double>(count) / static_cast<double>(total); }
};

/// Naive scan over the support.
inline BallMeasure measure_ball(const TorusCloud& cloud, const BallSpec& ball) {
  if (ball.center.dimension() != cloud.n()) throw DomainError("ball center dimension mismatch");
  const DistanceFrame frame(cloud.p(), ball.center);
  BallMeasure out{0, cloud.total_mass()};
  for (const auto& pt : cloud.points()) {
    if (frame.within(frame.squared_numerator(pt.residues), ball.radius)) out.count += pt.multiplicity;
  }
  return out;
}

/// Uniform cell grid over T^n (cell width >= max_radius) for repeated ball
/// counts on large clouds. Results are identical to the naive scan.
class BallCounter {
 public:
  BallCounter(const TorusCloud& cloud, double max_radius) : cloud_(&cloud), max_radius_(max_radius) {
    if (!(max_radius > 0) || !(max_radius < 0.5)) throw DomainError("BallCounter radius must lie in (0, 1/2)");
    const std::size_t n = cloud.n();
    cells_per_axis_ = static_cast<std::uint64_t>(std::floor(1.0 / max_radius));
    while (cells_per_axis_ > 1) {
      const auto total = checked_power(cells_per_axis_, static_cast<unsigned>(n));
      if (total && *total <= (std::uint64_t{1} << 22)) break;
      --cells_per_axis_;
    }
    cells_per_axis_ = std::max<std::uint64_t>(1, cells_per_axis_);
    const std::uint64_t cell_count = *checked_power(cells_per_axis_, static_cast<unsigned>(n));
    bucket_start_.assign(cell_count + 1, 0);
    std::vector<std::uint64_t> cell_of(cloud.points().size());
    for (std::size_t i = 0; i < cloud.points().size(); ++i) {
      std::uint64_t cell = 0;
      for (auto r : cloud.points()[i].residues) {
        cell = cell * cells_per_axis_ + static_cast<std::uint64_t>(static_cast<u128>(r) * cells_per_axis_ / cloud.p());
      }
      cell_of[i] = cell;
      ++bucket_start_[cell + 1];
    }
    std::partial_sum(bucket_start_.begin(), bucket_start_.end(), bucket_start_.begin());
    members_.resize(cloud.points().size());
    auto fill = bucket_start_;
    for (std::size_t i = 0; i < cell_of.size(); ++i) members_[fill[cell_of[i]]++] = i;
  }

  std::uint64_t cells_per_axis() const noexcept { return cells_per_axis_; }

  BallMeasure count(const BallSpec& ball) const {
    if (ball.radius > max_radius_) throw DomainError("query radius exceeds the BallCounter radius");
    const std::size_t n = cloud_->n();
    const DistanceFrame frame(cloud_->p(), ball.center);
    BallMeasure out{0, cloud_->total_mass()};
    const auto visit = [&](std::uint64_t cell) {
      for (std::uint64_t k = bucket_start_[cell]; k < bucket_start_[cell + 1]; ++k) {
        const auto& pt = cloud_->points()[members_[k]];
        if (frame.within(frame.squared_numerator(pt.residues), ball.radius)) out.count += pt.multiplicity;
      }
    };
    if (cells_per_axis_ < 3) {
      for (std::uint64_t c = 0; c + 1 < bucket_start_.size(); ++c) visit(c);
      return out;
    }
    std::vector<std::uint64_t> home(n);
    for (std::size_t i = 0; i < n; ++i) {
      home[i] = static_cast<std::uint64_t>(static_cast<u128>(ball.center.numerators[i]) * cells_per_axis_ /
                                           ball.center.denominator);
    }
    std::vector<int> offset(n, -1);
    for (;;) {
      std::uint64_t cell = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto c = (home[i] + cells_per_axis_ + static_cast<std::uint64_t>(offset[i] + 1) - 1) % cells_per_axis_;
        cell = cell * cells_per_axis_ + c;
      }
      visit(cell);
      std::size_t i = n;
      while (i-- > 0) {
        if (++offset[i] <= 1) break;
        offset[i] = -1;
      }
      if (i == static_cast<std::size_t>(-1)) break;
    }
    return out;
  }

 private:
  const TorusCloud* cloud_;
  double max_radius_;
  std::uint64_t cells_per_axis_ = 1;
  std::vector<std::uint64_t> bucket_start_;
  std::vector<std::size_t> members_;
};

/// (1/total) sum_{d in A_G} f(d) with multiplicities, in support order.
inline Complex integrate_against(const TorusCloud& cloud, const std::function<Complex(const TorusPoint&)>& f) {
  parallel::CompensatedSum<double> re, im;
  for (const auto& pt : cloud.points()) {
    const Complex value = f(pt.point(cloud.p())) * static_cast<double>(pt.multiplicity);
    re.add(value.real());
    im.add(value.imag());
  }
  const double total = static_cast<double>(cloud.total_mass());
  return {re.value() / total, im.value() / total};
}

// ---------------------------------------------------------------------------
// Export and binary cache

/// CSV rows x_1..x_n,multiplicity with x_i = residue / p.
inline void write_cloud_csv(std::ostream& out, const TorusCloud& cloud) {
  for (std::size_t k = 0; k < cloud.n(); ++k) out << "x_" << (k + 1) << ',';
  out << "multiplicity\n";
  for (const auto& pt : cloud.points()) {
    for (auto r : pt.residues) {
      out << format_double(static_cast<double>(r) / static_cast<double>(cloud.p())) << ',';
    }
    out << pt.multiplicity << '\n';
  }
}

namespace detail {
inline constexpr std::array<char, 8> kCloudMagic = {'T', 'Q', 'C', 'L', 'O', 'U', 'D', '1'};

inline void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

inline bool get_u64(std::istream& in, std::uint64_t& v) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) return false;
  v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return true;
}
}  // namespace detail

/// Little-endian binary cache: magic, key hash, p, m, n, support size, then
/// (residues..., multiplicity) per point.
inline void save_cloud_binary(const std::string& path, const TorusCloud& cloud, std::uint64_t key_hash) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write cloud cache " + path);
  out.write(detail::kCloudMagic.data(), detail::kCloudMagic.size());
  for (std::uint64_t v : {key_hash, cloud.p(), static_cast<std::uint64_t>(cloud.m()),
                          static_cast<std::uint64_t>(cloud.n()), static_cast<std::uint64_t>(cloud.support_size())}) {
    detail::put_u64(out, v);
  }
  for (const auto& pt : cloud.points()) {
    for (auto r : pt.residues) detail::put_u64(out, r);
    detail::put_u64(out, pt.multiplicity);
  }
  if (!out) throw Error("failed writing cloud cache " + path);
}

/// Loads a cache file; nullopt when missing, corrupt or keyed differently.
inline std::optional<TorusCloud> load_cloud_binary(const std::string& path, std::uint64_t key_hash, std::uint64_t p) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != detail::kCloudMagic) return std::nullopt;
  std::uint64_t hash = 0, pp = 0, m = 0, n = 0, count = 0;
  if (!detail::get_u64(in, hash) || !detail::get_u64(in, pp) || !detail::get_u64(in, m) || !detail::get_u64(in, n) ||
      !detail::get_u64(in, count)) {
    return std::nullopt;
  }
  if (hash != key_hash || pp != p || n == 0 || n > 64) return std::nullopt;
  std::vector<CloudPoint> points;
  points.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    CloudPoint pt{std::vector<Residue>(n), 0};
    for (auto& r : pt.residues) {
      if (!detail::get_u64(in, r)) return std::nullopt;
    }
    if (!detail::get_u64(in, pt.multiplicity)) return std::nullopt;
    points.push_back(std::move(pt));
  }
  try {
    return TorusCloud(p, m, n, std::move(points));
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace torusq
