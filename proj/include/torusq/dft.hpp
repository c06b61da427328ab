#pragma once

// Prime-length discrete Fourier transforms
//
//   X[k] = sum_j x[j] * exp(sign * 2 pi i j k / L)
//
// Lengths up to kNaiveLimit use the O(L^2) matrix with integer phase indices
// (bit-reproducible, no twiddle drift). Longer lengths use Bluestein's chirp-z
// reduction to a power-of-two cyclic convolution; chirp phases are computed
// from k^2 mod 2L in exact integer arithmetic.

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "torusq/error.hpp"

namespace torusq::dft {

using Complex = std::complex<double>;

inline constexpr std::size_t kNaiveLimit = 512;

/// exp(2 pi i k / L) for k in [0, L).
class UnitRoots {
 public:
  explicit UnitRoots(std::uint64_t length) : table_(length) {
    for (std::uint64_t k = 0; k < length; ++k) {
      // Reflect into the first half so that table[L-k] == conj(table[k]) exactly.
      const bool upper = 2 * k > length;
      const std::uint64_t kk = upper ? length - k : k;
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(kk) / static_cast<double>(length);
      const Complex w(std::cos(angle), std::sin(angle));
      table_[k] = upper ? std::conj(w) : w;
    }
  }

  std::uint64_t length() const noexcept { return table_.size(); }
  const Complex& operator[](std::uint64_t k) const noexcept { return table_[k]; }

 private:
  std::vector<Complex> table_;
};

/// In-place iterative radix-2 FFT with exp(sign * 2 pi i jk / N).
class Radix2Fft {
 public:
  explicit Radix2Fft(std::size_t size) : size_(size), twiddles_(size / 2) {
    if (size == 0 || (size & (size - 1)) != 0) throw DomainError("radix-2 FFT size must be a power of two");
    for (std::size_t k = 0; k < size / 2; ++k) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(size);
      twiddles_[k] = Complex(std::cos(angle), std::sin(angle));
    }
  }

  std::size_t size() const noexcept { return size_; }

  void transform(std::span<Complex> a, int sign) const {
    const std::size_t n = size_;
    for (std::size_t i = 1, j = 0; i < n; ++i) {
      std::size_t bit = n >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
      const std::size_t step = n / len;
      for (std::size_t i = 0; i < n; i += len) {
        for (std::size_t k = 0; k < len / 2; ++k) {
          Complex w = twiddles_[k * step];
          if (sign < 0) w = std::conj(w);
          const Complex u = a[i + k];
          const Complex v = a[i + k + len / 2] * w;
          a[i + k] = u + v;
          a[i + k + len / 2] = u - v;
        }
      }
    }
  }

 private:
  std::size_t size_;
  std::vector<Complex> twiddles_;
};

/// Reusable plan for one transform length and sign.
class PrimeLengthDft {
 public:
  PrimeLengthDft(std::uint64_t length, int sign) : length_(length), sign_(sign < 0 ? -1 : 1), roots_(length) {
    if (length == 0) throw DomainError("DFT length must be positive");
    if (length > kNaiveLimit) init_bluestein();
  }

  std::uint64_t length() const noexcept { return length_; }
  bool uses_bluestein() const noexcept { return length_ > kNaiveLimit; }

  /// Transforms `data` (size == length) in place; `scratch` is reused.
  void transform(std::span<Complex> data, std::vector<Complex>& scratch) const {
    if (uses_bluestein()) {
      bluestein(data, scratch);
    } else {
      naive(data, scratch);
    }
  }

  void transform(std::span<Complex> data) const {
    std::vector<Complex> scratch;
    transform(data, scratch);
  }

  /// Reference O(L^2) evaluation regardless of length.
  void naive(std::span<Complex> data, std::vector<Complex>& scratch) const {
    const std::uint64_t L = length_;
    scratch.assign(data.begin(), data.end());
    for (std::uint64_t k = 0; k < L; ++k) {
      Complex acc = 0;
      std::uint64_t phase = 0;  // j*k mod L
      for (std::uint64_t j = 0; j < L; ++j) {
        const Complex& w = roots_[sign_ > 0 ? phase : (phase == 0 ? 0 : L - phase)];
        acc += scratch[j] * w;
        phase += k;
        if (phase >= L) phase -= L;
      }
      data[k] = acc;
    }
  }

 private:
  void init_bluestein() {
    std::size_t m = 1;
    while (m < 2 * length_ - 1) m <<= 1;
    fft_ = std::make_unique<Radix2Fft>(m);
    chirp_.resize(length_);
    const std::uint64_t two_l = 2 * length_;
    for (std::uint64_t t = 0; t < length_; ++t) {
      const auto sq = static_cast<std::uint64_t>(static_cast<unsigned __int128>(t) * t % two_l);
      const double angle = std::numbers::pi * static_cast<double>(sq) / static_cast<double>(length_);
      chirp_[t] = Complex(std::cos(angle), sign_ * std::sin(angle));
    }
    kernel_.assign(m, Complex(0));
    for (std::uint64_t t = 0; t < length_; ++t) {
      kernel_[t] = std::conj(chirp_[t]);
      if (t > 0) kernel_[m - t] = std::conj(chirp_[t]);
    }
    fft_->transform(kernel_, +1);
  }

  void bluestein(std::span<Complex> data, std::vector<Complex>& scratch) const {
    const std::size_t m = fft_->size();
    scratch.assign(m, Complex(0));
    for (std::uint64_t j = 0; j < length_; ++j) scratch[j] = data[j] * chirp_[j];
    fft_->transform(scratch, +1);
    for (std::size_t i = 0; i < m; ++i) scratch[i] *= kernel_[i];
    fft_->transform(scratch, -1);
    const double inv = 1.0 / static_cast<double>(m);
    for (std::uint64_t k = 0; k < length_; ++k) data[k] = scratch[k] * inv * chirp_[k];
  }

  std::uint64_t length_;
  int sign_;
  UnitRoots roots_;
  std::unique_ptr<Radix2Fft> fft_;
  std::vector<Complex> chirp_;
  std::vector<Complex> kernel_;
};

}  // namespace torusq::dft
