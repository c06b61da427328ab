#pragma once

// Arithmetic in F_p, sparse polynomial systems G = (G_1, ..., G_n) in m
// variables, their text/JSON forms, and enumeration of F_p^m.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "torusq/error.hpp"

namespace torusq {

using Residue = std::uint64_t;

// ---------------------------------------------------------------------------
// Modular helpers

inline Residue mul_mod(Residue a, Residue b, Residue p) {
  return static_cast<Residue>(static_cast<unsigned __int128>(a) * b % p);
}

inline Residue add_mod(Residue a, Residue b, Residue p) {
  const Residue s = a + b;  // a, b < p < 2^63 so no wrap
  return s >= p ? s - p : s;
}

/// base^exponent mod p with 0^0 = 1. For a nonzero base the exponent is
/// reduced mod (p-1) first; a zero base keeps 0^e = 0 for every e > 0.
inline Residue pow_mod(Residue base, std::uint64_t exponent, Residue p) {
  if (exponent == 0) return 1 % p;
  base %= p;
  if (base == 0) return 0;
  exponent %= (p - 1);
  Residue result = 1 % p;
  while (exponent > 0) {
    if (exponent & 1u) result = mul_mod(result, base, p);
    base = mul_mod(base, base, p);
    exponent >>= 1;
  }
  return result;
}

/// Deterministic Miller-Rabin; exact for every 64-bit input.
inline bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t q : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    if (n % q == 0) return n == q;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1u) == 0) {
    d >>= 1;
    ++s;
  }
  auto power = [n](std::uint64_t b, std::uint64_t e) {
    std::uint64_t r = 1;
    b %= n;
    while (e) {
      if (e & 1u) r = mul_mod(r, b, n);
      b = mul_mod(b, b, n);
      e >>= 1;
    }
    return r;
  };
  for (std::uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    std::uint64_t x = power(a, d);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mul_mod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

/// Returns base^exponent, or nullopt when it does not fit in 64 bits.
inline std::optional<std::uint64_t> checked_power(std::uint64_t base, unsigned exponent) {
  std::uint64_t result = 1;
  for (unsigned i = 0; i < exponent; ++i) {
    if (base != 0 && result > std::numeric_limits<std::uint64_t>::max() / base) return std::nullopt;
    result *= base;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Domain types

class PrimeModulus {
 public:
  explicit PrimeModulus(std::uint64_t p) : p_(p) {
    if (p >= (std::uint64_t{1} << 63)) throw DomainError("modulus must be below 2^63");
    if (!is_prime(p)) throw DomainError("modulus " + std::to_string(p) + " is not prime");
  }

  std::uint64_t value() const noexcept { return p_; }
  Residue reduce(std::uint64_t x) const noexcept { return x % p_; }
  Residue reduce_signed(std::int64_t x) const noexcept {
    const auto p = static_cast<std::int64_t>(p_);
    std::int64_t r = x % p;
    if (r < 0) r += p;
    return static_cast<Residue>(r);
  }

  friend bool operator==(const PrimeModulus&, const PrimeModulus&) = default;

 private:
  std::uint64_t p_;
};

struct Monomial {
  Residue coefficient = 0;
  std::vector<std::uint32_t> exponents;

  friend bool operator==(const Monomial&, const Monomial&) = default;
};

using Polynomial = std::vector<Monomial>;

class PolynomialSystem {
 public:
  PolynomialSystem(PrimeModulus modulus, std::size_t num_vars, std::vector<Polynomial> polys)
      : modulus_(modulus), num_vars_(num_vars), polys_(std::move(polys)) {
    if (num_vars_ < 1) throw DomainError("system needs at least one variable");
    if (polys_.empty()) throw DomainError("system needs at least one polynomial");
    for (auto& poly : polys_) {
      for (auto& mono : poly) {
        if (mono.exponents.size() != num_vars_) {
          throw DomainError("monomial exponent length " + std::to_string(mono.exponents.size()) +
                            " does not match variable count " + std::to_string(num_vars_));
        }
        mono.coefficient = modulus_.reduce(mono.coefficient);
      }
    }
  }

  const PrimeModulus& modulus() const noexcept { return modulus_; }
  std::uint64_t p() const noexcept { return modulus_.value(); }
  std::size_t num_vars() const noexcept { return num_vars_; }
  std::size_t num_polys() const noexcept { return polys_.size(); }
  const std::vector<Polynomial>& polys() const noexcept { return polys_; }

  friend bool operator==(const PolynomialSystem&, const PolynomialSystem&) = default;

 private:
  PrimeModulus modulus_;
  std::size_t num_vars_;
  std::vector<Polynomial> polys_;
};

// ---------------------------------------------------------------------------
// Canonical form

/// Merges equal exponent vectors, drops zero coefficients and orders
/// monomials by descending total degree, then descending exponents.
inline Polynomial canonicalize(Polynomial poly, std::uint64_t p) {
  auto degree = [](const Monomial& m) {
    std::uint64_t d = 0;
    for (auto e : m.exponents) d += e;
    return d;
  };
  std::sort(poly.begin(), poly.end(), [&](const Monomial& a, const Monomial& b) {
    const auto da = degree(a), db = degree(b);
    if (da != db) return da > db;
    return a.exponents > b.exponents;
  });
  Polynomial out;
  for (auto& mono : poly) {
    if (!out.empty() && out.back().exponents == mono.exponents) {
      out.back().coefficient = add_mod(out.back().coefficient, mono.coefficient % p, p);
    } else {
      out.push_back(mono);
      out.back().coefficient %= p;
    }
  }
  std::erase_if(out, [](const Monomial& m) { return m.coefficient == 0; });
  return out;
}

inline PolynomialSystem canonicalize(const PolynomialSystem& g) {
  std::vector<Polynomial> polys;
  for (const auto& poly : g.polys()) polys.push_back(canonicalize(poly, g.p()));
  return PolynomialSystem(g.modulus(), g.num_vars(), std::move(polys));
}

// ---------------------------------------------------------------------------
// Text grammar
//
//   system := stmt (';' stmt)* [';']
//   stmt   := 'p' '=' int | 'm' '=' int | 'n' '=' int | 'G' int '=' sum
//   sum    := ['+'|'-'] term (('+'|'-') term)*
//   term   := factor ('*' factor)*
//   factor := int | 'X' int ['^' int]
//
// Whitespace is ignored everywhere. p, m and n must precede the G statements
// and every G1..Gn must appear exactly once.

namespace detail {

class SystemParser {
 public:
  explicit SystemParser(std::string_view text) : text_(text) {}

  PolynomialSystem parse() {
    std::optional<std::uint64_t> p, m, n;
    std::vector<std::optional<Polynomial>> polys;
    std::optional<PrimeModulus> modulus;
    skip_ws();
    while (pos_ < text_.size()) {
      const std::size_t stmt_pos = pos_;
      const char head = text_[pos_];
      if (head == 'p' || head == 'm' || head == 'n') {
        ++pos_;
        expect('=');
        const std::size_t value_pos = pos_;
        const std::uint64_t value = parse_uint();
        if (!polys.empty()) throw ParseError("header field after polynomial statements", stmt_pos);
        auto& slot = head == 'p' ? p : head == 'm' ? m : n;
        if (slot) throw ParseError(std::string("duplicate field '") + head + "'", stmt_pos);
        slot = value;
        if (head == 'p') {
          if (!is_prime(value) || value >= (std::uint64_t{1} << 63)) {
            throw ParseError("modulus " + std::to_string(value) + " is not prime", value_pos);
          }
          modulus.emplace(value);
        }
      } else if (head == 'G') {
        ++pos_;
        if (!p || !m || !n) throw ParseError("p, m and n must be given before polynomials", stmt_pos);
        if (*m < 1 || *m > 64) throw ParseError("variable count m must be in [1, 64]", stmt_pos);
        if (*n < 1 || *n > 64) throw ParseError("polynomial count n must be in [1, 64]", stmt_pos);
        if (polys.empty()) polys.resize(*n);
        const std::size_t index_pos = pos_;
        const std::uint64_t k = parse_uint();
        if (k < 1 || k > *n) throw ParseError("polynomial index G" + std::to_string(k) + " out of range", index_pos);
        if (polys[k - 1]) throw ParseError("duplicate polynomial G" + std::to_string(k), stmt_pos);
        expect('=');
        polys[k - 1] = parse_sum(*modulus, *m);
      } else {
        throw ParseError(std::string("unexpected character '") + head + "'", pos_);
      }
      skip_ws();
      if (pos_ < text_.size()) {
        expect(';');
      }
    }
    if (!p) throw ParseError("missing field 'p'", pos_);
    if (!m) throw ParseError("missing field 'm'", pos_);
    if (!n) throw ParseError("missing field 'n'", pos_);
    if (polys.empty()) throw ParseError("no polynomials given", pos_);
    std::vector<Polynomial> out;
    for (std::size_t k = 0; k < polys.size(); ++k) {
      if (!polys[k]) throw ParseError("missing polynomial G" + std::to_string(k + 1), pos_);
      out.push_back(canonicalize(std::move(*polys[k]), *p));
    }
    return PolynomialSystem(*modulus, *m, std::move(out));
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c) {
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
    ++pos_;
    skip_ws();
  }

  std::uint64_t parse_uint() {
    skip_ws();
    const std::size_t start = pos_;
    std::uint64_t value = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      const auto digit = static_cast<std::uint64_t>(text_[pos_] - '0');
      if (value > (std::numeric_limits<std::uint64_t>::max() - digit) / 10) {
        throw ParseError("integer too large", start);
      }
      value = value * 10 + digit;
      ++pos_;
    }
    if (pos_ == start) throw ParseError("expected integer", start);
    skip_ws();
    return value;
  }

  // Arbitrary-length integer literal, reduced mod p digit by digit.
  Residue parse_residue(std::uint64_t p) {
    skip_ws();
    const std::size_t start = pos_;
    Residue value = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      value = add_mod(mul_mod(value, 10 % p, p), static_cast<Residue>(text_[pos_] - '0') % p, p);
      ++pos_;
    }
    if (pos_ == start) throw ParseError("expected integer", start);
    skip_ws();
    return value;
  }

  Polynomial parse_sum(const PrimeModulus& modulus, std::uint64_t m) {
    Polynomial poly;
    bool negative = false;
    skip_ws();
    if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
      negative = text_[pos_] == '-';
      ++pos_;
    }
    for (;;) {
      Monomial mono = parse_term(modulus, m);
      if (negative && mono.coefficient != 0) mono.coefficient = modulus.value() - mono.coefficient;
      poly.push_back(std::move(mono));
      skip_ws();
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
        negative = text_[pos_] == '-';
        ++pos_;
        continue;
      }
      break;
    }
    return poly;
  }

  Monomial parse_term(const PrimeModulus& modulus, std::uint64_t m) {
    const std::uint64_t p = modulus.value();
    Monomial mono{1 % p, std::vector<std::uint32_t>(m, 0)};
    for (;;) {
      skip_ws();
      if (pos_ >= text_.size()) throw ParseError("expected factor", pos_);
      if (text_[pos_] == 'X') {
        ++pos_;
        const std::size_t var_pos = pos_;
        const std::uint64_t var = parse_uint();
        if (var < 1 || var > m) {
          throw ParseError("variable X" + std::to_string(var) + " outside X1..X" + std::to_string(m), var_pos);
        }
        std::uint64_t exponent = 1;
        if (pos_ < text_.size() && text_[pos_] == '^') {
          ++pos_;
          const std::size_t exp_pos = pos_;
          exponent = parse_uint();
          if (exponent > std::numeric_limits<std::uint32_t>::max()) throw ParseError("exponent too large", exp_pos);
        }
        const std::uint64_t total = mono.exponents[var - 1] + exponent;
        if (total > std::numeric_limits<std::uint32_t>::max()) throw ParseError("exponent too large", var_pos);
        mono.exponents[var - 1] = static_cast<std::uint32_t>(total);
      } else if (std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        mono.coefficient = mul_mod(mono.coefficient, parse_residue(p), p);
      } else {
        throw ParseError(std::string("unexpected character '") + text_[pos_] + "' in term", pos_);
      }
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == '*') {
        ++pos_;
        continue;
      }
      return mono;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline PolynomialSystem parse_system(std::string_view text) { return detail::SystemParser(text).parse(); }

/// Canonical text form; parse_system(to_text(g)) == canonicalize(g).
inline std::string to_text(const PolynomialSystem& g) {
  const auto canon = canonicalize(g);
  std::string out = "p=" + std::to_string(g.p()) + "; m=" + std::to_string(g.num_vars()) +
                    "; n=" + std::to_string(g.num_polys());
  for (std::size_t k = 0; k < canon.num_polys(); ++k) {
    out += "; G" + std::to_string(k + 1) + " = ";
    const auto& poly = canon.polys()[k];
    if (poly.empty()) {
      out += "0";
      continue;
    }
    for (std::size_t t = 0; t < poly.size(); ++t) {
      if (t > 0) out += " + ";
      const auto& mono = poly[t];
      std::string term;
      for (std::size_t v = 0; v < mono.exponents.size(); ++v) {
        if (mono.exponents[v] == 0) continue;
        if (!term.empty()) term += "*";
        term += "X" + std::to_string(v + 1);
        if (mono.exponents[v] > 1) term += "^" + std::to_string(mono.exponents[v]);
      }
      if (term.empty()) {
        term = std::to_string(mono.coefficient);
      } else if (mono.coefficient != 1) {
        term = std::to_string(mono.coefficient) + "*" + term;
      }
      out += term;
    }
  }
  return out;
}

inline nlohmann::json to_json(const PolynomialSystem& g) {
  nlohmann::json polys = nlohmann::json::array();
  for (const auto& poly : g.polys()) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& mono : poly) terms.push_back({{"c", mono.coefficient}, {"e", mono.exponents}});
    polys.push_back(std::move(terms));
  }
  return {{"p", g.p()}, {"m", g.num_vars()}, {"n", g.num_polys()}, {"polys", std::move(polys)}};
}

inline PolynomialSystem system_from_json(const nlohmann::json& j) {
  try {
    const auto p = j.at("p").get<std::uint64_t>();
    const auto m = j.at("m").get<std::size_t>();
    const auto n = j.at("n").get<std::size_t>();
    std::vector<Polynomial> polys;
    for (const auto& terms : j.at("polys")) {
      Polynomial poly;
      for (const auto& t : terms) {
        poly.push_back({t.at("c").get<Residue>(), t.at("e").get<std::vector<std::uint32_t>>()});
      }
      polys.push_back(std::move(poly));
    }
    if (polys.size() != n) throw DomainError("polys length does not match n");
    return PolynomialSystem(PrimeModulus(p), m, std::move(polys));
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed system JSON: ") + e.what());
  }
}

/// 64-bit FNV-1a of the canonical text; used as a cache key together with p.
inline std::uint64_t system_hash(const PolynomialSystem& g) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : to_text(g)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Builtin families

/// "moments" with degrees d_1 < ... < d_n < p gives (X^{d_1}, ..., X^{d_n});
/// "kloosterman" gives (X, X^{p-2}), i.e. (x, x^{-1}) with 0 -> 0.
inline PolynomialSystem builtin_system(std::string_view name, std::span<const std::uint64_t> params,
                                       const PrimeModulus& modulus) {
  const std::uint64_t p = modulus.value();
  auto monomial = [](std::uint64_t degree) {
    return Monomial{1, {static_cast<std::uint32_t>(degree)}};
  };
  if (name == "moments") {
    if (params.empty()) throw DomainError("moments needs at least one degree");
    std::vector<Polynomial> polys;
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i] == 0) throw DomainError("moments degrees must be positive");
      if (params[i] >= p) {
        throw DomainError("moments degree " + std::to_string(params[i]) + " must be below p=" + std::to_string(p));
      }
      if (i > 0 && params[i] <= params[i - 1]) throw DomainError("moments degrees must be strictly increasing");
      polys.push_back({monomial(params[i])});
    }
    return PolynomialSystem(modulus, 1, std::move(polys));
  }
  if (name == "kloosterman") {
    if (!params.empty()) throw DomainError("kloosterman takes no parameters");
    if (p < 3) throw DomainError("kloosterman needs p >= 3");
    return PolynomialSystem(modulus, 1, {{monomial(1)}, {monomial(p - 2)}});
  }
  throw DomainError("unknown builtin system '" + std::string(name) + "'");
}

/// A builtin family: name plus parameters, instantiated per prime.
struct BuiltinFamily {
  std::string name;
  std::vector<std::uint64_t> params;

  PolynomialSystem at(std::uint64_t p) const { return builtin_system(name, params, PrimeModulus(p)); }

  /// "moments:1,2" or "kloosterman".
  static BuiltinFamily parse(std::string_view spec) {
    BuiltinFamily family;
    const auto colon = spec.find(':');
    family.name = std::string(spec.substr(0, colon));
    if (colon != std::string_view::npos) {
      std::string_view rest = spec.substr(colon + 1);
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto token = rest.substr(0, comma);
        std::uint64_t value = 0;
        if (token.empty()) throw DomainError("empty parameter in builtin '" + std::string(spec) + "'");
        for (char c : token) {
          if (!std::isdigit(static_cast<unsigned char>(c))) {
            throw DomainError("bad parameter in builtin '" + std::string(spec) + "'");
          }
          value = value * 10 + static_cast<std::uint64_t>(c - '0');
        }
        family.params.push_back(value);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
      }
    }
    if (family.name != "moments" && family.name != "kloosterman") {
      throw DomainError("unknown builtin system '" + family.name + "'");
    }
    return family;
  }

  std::string to_string() const {
    std::string out = name;
    for (std::size_t i = 0; i < params.size(); ++i) out += (i == 0 ? ":" : ",") + std::to_string(params[i]);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Evaluation

inline Residue eval_polynomial(const Polynomial& poly, std::span<const Residue> x, std::uint64_t p) {
  Residue acc = 0;
  for (const auto& mono : poly) {
    Residue term = mono.coefficient;
    for (std::size_t v = 0; v < x.size() && term != 0; ++v) {
      if (mono.exponents[v] != 0) term = mul_mod(term, pow_mod(x[v], mono.exponents[v], p), p);
    }
    acc = add_mod(acc, term, p);
  }
  return acc;
}

/// Writes (G_1(x), ..., G_n(x)) into `out` without range checks.
inline void eval_system_into(const PolynomialSystem& g, std::span<const Residue> x, std::span<Residue> out) {
  const auto p = g.p();
  for (std::size_t j = 0; j < g.num_polys(); ++j) out[j] = eval_polynomial(g.polys()[j], x, p);
}

inline std::vector<Residue> eval_system(const PolynomialSystem& g, std::span<const Residue> x) {
  if (x.size() != g.num_vars()) {
    throw DomainError("point has " + std::to_string(x.size()) + " coordinates, system has " +
                      std::to_string(g.num_vars()) + " variables");
  }
  for (auto c : x) {
    if (c >= g.p()) throw DomainError("coordinate " + std::to_string(c) + " outside [0, p)");
  }
  std::vector<Residue> out(g.num_polys());
  eval_system_into(g, x, out);
  return out;
}

// ---------------------------------------------------------------------------
// Enumeration of F_p^m in lexicographic order (first coordinate most
// significant). Index i corresponds to the base-p digits of i.

class DomainEnumerator {
 public:
  DomainEnumerator(const PrimeModulus& modulus, std::size_t m) : p_(modulus.value()), m_(m) {
    if (m < 1) throw DomainError("domain dimension must be at least 1");
    const auto size = checked_power(p_, static_cast<unsigned>(m));
    if (!size) {
      throw BudgetError("p^m = " + std::to_string(p_) + "^" + std::to_string(m) + " overflows a 64-bit count");
    }
    size_ = *size;
  }

  std::uint64_t size() const noexcept { return size_; }
  std::size_t dimension() const noexcept { return m_; }
  std::uint64_t p() const noexcept { return p_; }

  void point_at(std::uint64_t index, std::span<Residue> out) const {
    for (std::size_t k = m_; k-- > 0;) {
      out[k] = index % p_;
      index /= p_;
    }
  }

  std::vector<Residue> point_at(std::uint64_t index) const {
    std::vector<Residue> out(m_);
    point_at(index, out);
    return out;
  }

  /// Visits indices [begin, end) in order, calling fn(index, point).
  template <class Fn>
  void for_each(std::uint64_t begin, std::uint64_t end, Fn&& fn) const {
    if (begin >= end) return;
    std::vector<Residue> x(m_);
    point_at(begin, x);
    for (std::uint64_t i = begin; i < end; ++i) {
      fn(i, std::span<const Residue>(x));
      for (std::size_t k = m_; k-- > 0;) {
        if (++x[k] < p_) break;
        x[k] = 0;
      }
    }
  }

  template <class Fn>
  void for_each(Fn&& fn) const {
    for_each(0, size_, std::forward<Fn>(fn));
  }

  /// Contiguous [begin, end) index ranges of at most `chunk_size` points.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> chunks(std::uint64_t chunk_size) const {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
    if (chunk_size == 0) chunk_size = 1;
    for (std::uint64_t b = 0; b < size_; b += std::min(chunk_size, size_ - b)) {
      out.emplace_back(b, b + std::min(chunk_size, size_ - b));
    }
    return out;
  }

 private:
  std::uint64_t p_;
  std::size_t m_;
  std::uint64_t size_ = 0;
};

inline DomainEnumerator enumerate_domain(const PrimeModulus& modulus, std::size_t m) {
  return DomainEnumerator(modulus, m);
}

}  // namespace torusq
