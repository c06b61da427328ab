#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <system_error>

namespace torusq {

/// Shortest round-trip decimal form; identical bytes on every run.
inline std::string format_double(double x) {
  if (x == 0) x = 0;  // drop the sign of -0
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), x);
  if (result.ec != std::errc()) return "nan";
  return std::string(buf, result.ptr);
}

inline std::string format_hex64(std::uint64_t x) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[x & 0xfu];
    x >>= 4;
  }
  return out;
}

}  // namespace torusq
