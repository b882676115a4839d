#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace wmqkd {

// Shortest round-trip-safe text at 17 significant digits, independent of locale.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace wmqkd
