#pragma once

// Weyl sums S_G(v) = sum_{x in F_p^m} e_p(v . G(x)).
//
// The direct path reduces v . G(x) mod p in integer arithmetic, counts how
// often each phase occurs and takes a single dot product with the unit roots.
// The fast path builds the value histogram h(g) = #{x : G(x) = g} over F_p^n
// and applies an n-dimensional length-p DFT with positive sign, since
// S_G(v) = sum_g h(g) e_p(v . g).

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "torusq/dft.hpp"
#include "torusq/error.hpp"
#include "torusq/ffpoly.hpp"
#include "torusq/format.hpp"
#include "torusq/parallel.hpp"

namespace torusq {

using Complex = std::complex<double>;

/// Integer frequency vector v in Z^n.
struct FrequencyVector {
  std::vector<std::int64_t> components;

  std::size_t size() const noexcept { return components.size(); }

  /// Coordinates reduced into [0, p).
  std::vector<Residue> canonical(const PrimeModulus& modulus) const {
    std::vector<Residue> out;
    out.reserve(components.size());
    for (auto c : components) out.push_back(modulus.reduce_signed(c));
    return out;
  }
};

/// Caps on table sizes; exceeded caps raise BudgetError.
struct TableBudget {
  std::uint64_t max_entries = std::uint64_t{1} << 25;
};

namespace detail {

inline std::uint64_t table_size(std::uint64_t p, std::size_t n, const TableBudget& budget) {
  const auto size = checked_power(p, static_cast<unsigned>(n));
  if (!size || *size > budget.max_entries) {
    throw BudgetError("table of p^n = " + std::to_string(p) + "^" + std::to_string(n) +
                      " entries exceeds the cap of " + std::to_string(budget.max_entries));
  }
  return *size;
}

inline std::uint64_t encode(std::span<const Residue> g, std::uint64_t p) {
  std::uint64_t idx = 0;
  for (auto c : g) idx = idx * p + c;
  return idx;
}

// Points per enumeration task. Integer reductions are order independent, so
// only the chunking of floating reductions has to be fixed.
inline constexpr std::uint64_t kEnumerationChunk = std::uint64_t{1} << 15;

}  // namespace detail

inline Complex weyl_sum_direct(const PolynomialSystem& g, const FrequencyVector& v) {
  if (v.size() != g.num_polys()) {
    throw DomainError("frequency vector has " + std::to_string(v.size()) + " components, system has " +
                      std::to_string(g.num_polys()) + " polynomials");
  }
  const std::uint64_t p = g.p();
  const auto vr = v.canonical(g.modulus());
  const DomainEnumerator domain(g.modulus(), g.num_vars());
  const auto chunks = domain.chunks(detail::kEnumerationChunk);
  const std::size_t tasks = std::min<std::size_t>(chunks.size(), parallel::threads());
  std::vector<std::vector<std::uint64_t>> counts(tasks, std::vector<std::uint64_t>(p, 0));
  parallel::for_each_task(tasks, [&](std::size_t t) {
    auto& local = counts[t];
    std::vector<Residue> values(g.num_polys());
    for (std::size_t c = t; c < chunks.size(); c += tasks) {
      domain.for_each(chunks[c].first, chunks[c].second, [&](std::uint64_t, std::span<const Residue> x) {
        eval_system_into(g, x, values);
        Residue phase = 0;
        for (std::size_t j = 0; j < values.size(); ++j) phase = add_mod(phase, mul_mod(vr[j], values[j], p), p);
        ++local[phase];
      });
    }
  });
  const dft::UnitRoots roots(p);
  parallel::CompensatedSum<double> re, im;
  for (std::uint64_t k = 0; k < p; ++k) {
    std::uint64_t c = 0;
    for (const auto& local : counts) c += local[k];
    if (c == 0) continue;
    re.add(static_cast<double>(c) * roots[k].real());
    im.add(static_cast<double>(c) * roots[k].imag());
  }
  return {re.value(), im.value()};
}

/// entry[encode(g)] = #{x in F_p^m : G(x) = g}; row-major with G_1 most
/// significant.
inline std::vector<std::uint64_t> value_histogram(const PolynomialSystem& g, const TableBudget& budget = {}) {
  const std::uint64_t p = g.p();
  const std::uint64_t size = detail::table_size(p, g.num_polys(), budget);
  const DomainEnumerator domain(g.modulus(), g.num_vars());
  const auto chunks = domain.chunks(detail::kEnumerationChunk);
  std::size_t tasks = std::min<std::size_t>(chunks.size(), parallel::threads());
  if (tasks > 1 && size * tasks > budget.max_entries) tasks = 1;
  std::vector<std::vector<std::uint64_t>> partial(tasks);
  parallel::for_each_task(tasks, [&](std::size_t t) {
    auto& local = partial[t];
    local.assign(size, 0);
    std::vector<Residue> values(g.num_polys());
    for (std::size_t c = t; c < chunks.size(); c += tasks) {
      domain.for_each(chunks[c].first, chunks[c].second, [&](std::uint64_t, std::span<const Residue> x) {
        eval_system_into(g, x, values);
        ++local[detail::encode(values, p)];
      });
    }
  });
  for (std::size_t t = 1; t < tasks; ++t) {
    for (std::uint64_t i = 0; i < size; ++i) partial[0][i] += partial[t][i];
  }
  return std::move(partial[0]);
}

/// Nontrivial maximum of |S_G(v)| over v outside pZ^n.
struct NontrivialMax {
  double magnitude = 0;
  std::uint64_t index = 0;  // table index of the maximizer; 0 if n/a
};

/// Table of S_G(v) for every representative v in [0, p)^n.
class WeylSpectrum {
 public:
  WeylSpectrum(std::uint64_t p, std::size_t m, std::size_t n, std::vector<Complex> table)
      : p_(p), m_(m), n_(n), table_(std::move(table)) {
    const auto size = checked_power(p, static_cast<unsigned>(n));
    if (!size || *size != table_.size()) throw DomainError("spectrum table size must be p^n");
    const auto dom = checked_power(p, static_cast<unsigned>(m));
    domain_size_ = dom ? static_cast<double>(*dom) : std::pow(static_cast<double>(p), static_cast<double>(m));
  }

  std::uint64_t p() const noexcept { return p_; }
  std::size_t m() const noexcept { return m_; }
  std::size_t n() const noexcept { return n_; }
  /// p^m as a double.
  double domain_size() const noexcept { return domain_size_; }
  std::uint64_t size() const noexcept { return table_.size(); }
  const std::vector<Complex>& table() const noexcept { return table_; }
  const Complex& at_index(std::uint64_t idx) const { return table_[idx]; }

  /// Index of the representative of v mod p.
  std::uint64_t index_of(std::span<const std::int64_t> v) const {
    if (v.size() != n_) throw DomainError("frequency vector dimension mismatch");
    const auto p = static_cast<std::int64_t>(p_);
    std::uint64_t idx = 0;
    for (auto c : v) {
      std::int64_t r = c % p;
      if (r < 0) r += p;
      idx = idx * p_ + static_cast<std::uint64_t>(r);
    }
    return idx;
  }

  /// S_G(v) for any v in Z^n (periodic in each coordinate).
  Complex at(std::span<const std::int64_t> v) const { return table_[index_of(v)]; }

  std::vector<std::int64_t> representative(std::uint64_t idx) const {
    std::vector<std::int64_t> v(n_);
    for (std::size_t k = n_; k-- > 0;) {
      v[k] = static_cast<std::int64_t>(idx % p_);
      idx /= p_;
    }
    return v;
  }

  std::uint64_t negated_index(std::uint64_t idx) const {
    std::uint64_t out = 0, scale = 1;
    for (std::size_t k = 0; k < n_; ++k) {
      const std::uint64_t digit = idx % p_;
      idx /= p_;
      out += ((p_ - digit) % p_) * scale;
      scale *= p_;
    }
    return out;
  }

  /// The histogram is real, so S(-v) = conj(S(v)): averages each computed
  /// pair and pins S(0) to the exact point count.
  void enforce_real_histogram_symmetry(std::span<const std::uint64_t> histogram) {
    for (std::uint64_t i = 0; i < table_.size(); ++i) {
      const std::uint64_t j = negated_index(i);
      if (j < i) continue;
      const Complex avg = 0.5 * (table_[i] + std::conj(table_[j]));
      table_[i] = avg;
      table_[j] = std::conj(avg);
    }
    std::uint64_t total = 0;
    for (auto h : histogram) total += h;
    table_[0] = Complex(static_cast<double>(total), 0.0);
  }

  /// max over v not in pZ^n (every nonzero representative).
  NontrivialMax max_nontrivial() const {
    NontrivialMax best;
    for (std::uint64_t i = 1; i < table_.size(); ++i) {
      const double a = std::abs(table_[i]);
      if (a > best.magnitude) best = {a, i};
    }
    return best;
  }

 private:
  std::uint64_t p_;
  std::size_t m_;
  std::size_t n_;
  double domain_size_ = 0;
  std::vector<Complex> table_;
};

/// Applies the n-dimensional length-p DFT (sign +1) to a row-major table.
inline void transform_table(std::vector<Complex>& table, std::uint64_t p, std::size_t n) {
  const dft::PrimeLengthDft plan(p, +1);
  std::uint64_t stride = table.size();
  for (std::size_t axis = 0; axis < n; ++axis) {
    stride /= p;  // distance between consecutive entries along this axis
    const std::uint64_t block = stride * p;
    const std::uint64_t lines = table.size() / p;
    const std::uint64_t lines_per_task = std::max<std::uint64_t>(1, 4096 / p);
    const std::uint64_t tasks = (lines + lines_per_task - 1) / lines_per_task;
    parallel::for_each_task(tasks, [&](std::size_t t) {
      std::vector<Complex> line(p), scratch;
      const std::uint64_t end = std::min<std::uint64_t>(lines, (t + 1) * lines_per_task);
      for (std::uint64_t l = t * lines_per_task; l < end; ++l) {
        const std::uint64_t base = (l / stride) * block + (l % stride);
        for (std::uint64_t k = 0; k < p; ++k) line[k] = table[base + k * stride];
        plan.transform(line, scratch);
        for (std::uint64_t k = 0; k < p; ++k) table[base + k * stride] = line[k];
      }
    });
  }
}

inline WeylSpectrum weyl_spectrum(const PolynomialSystem& g, const TableBudget& budget = {}) {
  const std::uint64_t p = g.p();
  const auto hist = value_histogram(g, budget);
  std::vector<Complex> table(hist.begin(), hist.end());
  transform_table(table, p, g.num_polys());
  WeylSpectrum spectrum(p, g.num_vars(), g.num_polys(), std::move(table));
  spectrum.enforce_real_histogram_symmetry(hist);
  return spectrum;
}

// ---------------------------------------------------------------------------
// Type-eta estimation

/// eta_hat(p) = (m log p - log max_{v not in pZ^n} |S_G(v)|) / log p. When all
/// nontrivial sums vanish the value is the sentinel ">= n".
struct EtaValue {
  double value = 0;
  bool at_least = false;  // sentinel: true exponent is at least `value` (= n)

  /// min(eta, n) as used by the branch formulas; the sentinel maps to n.
  double capped(std::size_t n) const { return at_least ? static_cast<double>(n) : std::min(value, static_cast<double>(n)); }

  std::string to_string() const { return at_least ? ">=" + format_double(value) : format_double(value); }
};

struct EtaEntry {
  std::uint64_t prime = 0;
  EtaValue eta;
  double max_abs = 0;
  std::optional<std::vector<std::int64_t>> argmax_v;
};

struct EtaReport {
  std::string family;
  std::vector<EtaEntry> entries;
  EtaValue minimum;
};

/// Magnitudes at or below this fraction of p^m count as vanishing.
inline constexpr double kVanishingTolerance = 1e-8;

inline EtaEntry eta_from_spectrum(const WeylSpectrum& spectrum) {
  EtaEntry entry;
  entry.prime = spectrum.p();
  const auto best = spectrum.max_nontrivial();
  entry.max_abs = best.magnitude;
  if (best.magnitude <= kVanishingTolerance * spectrum.domain_size()) {
    entry.eta = {static_cast<double>(spectrum.n()), true};
    return entry;
  }
  const double logp = std::log(static_cast<double>(spectrum.p()));
  entry.eta = {(static_cast<double>(spectrum.m()) * logp - std::log(best.magnitude)) / logp, false};
  entry.argmax_v = spectrum.representative(best.index);
  return entry;
}

/// Minimum over measured values; the sentinel only if nothing was measured.
inline EtaValue minimum_eta(const std::vector<EtaEntry>& entries) {
  std::optional<EtaValue> best;
  for (const auto& e : entries) {
    if (!best || (best->at_least && !e.eta.at_least) ||
        (best->at_least == e.eta.at_least && e.eta.value < best->value)) {
      best = e.eta;
    }
  }
  return best.value_or(EtaValue{});
}

inline EtaReport eta_estimate(const BuiltinFamily& family, std::span<const std::uint64_t> primes,
                              const TableBudget& budget = {}) {
  if (primes.empty()) throw DomainError("eta_estimate needs at least one prime");
  EtaReport report;
  report.family = family.to_string();
  for (auto p : primes) report.entries.push_back(eta_from_spectrum(weyl_spectrum(family.at(p), budget)));
  report.minimum = minimum_eta(report.entries);
  return report;
}

inline nlohmann::json to_json(const EtaEntry& e) {
  nlohmann::json j;
  j["prime"] = e.prime;
  if (e.eta.at_least) {
    j["eta_hat"] = e.eta.to_string();
  } else {
    j["eta_hat"] = e.eta.value;
  }
  j["max_abs"] = e.max_abs;
  j["argmax_v"] = e.argmax_v ? nlohmann::json(*e.argmax_v) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json to_json(const EtaReport& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : r.entries) entries.push_back(to_json(e));
  nlohmann::json minimum = r.minimum.at_least ? nlohmann::json(r.minimum.to_string()) : nlohmann::json(r.minimum.value);
  return {{"family", r.family}, {"entries", std::move(entries)}, {"minimum", std::move(minimum)}};
}

/// CSV with columns v_1..v_n,re,im,abs in table order.
inline void write_spectrum_csv(std::ostream& out, const WeylSpectrum& spectrum) {
  for (std::size_t k = 0; k < spectrum.n(); ++k) out << "v_" << (k + 1) << ',';
  out << "re,im,abs\n";
  for (std::uint64_t i = 0; i < spectrum.size(); ++i) {
    for (auto c : spectrum.representative(i)) out << c << ',';
    const auto& s = spectrum.at_index(i);
    out << format_double(s.real()) << ',' << format_double(s.imag()) << ',' << format_double(std::abs(s)) << '\n';
  }
}

}  // namespace torusq
