#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace stokesheat {

/// 17 significant digits, '.' decimal separator regardless of locale
/// (snprintf honours LC_NUMERIC, but nothing here calls setlocale).
inline std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// As fmt17, with JSON's null for non-finite values.
inline std::string json_number(double v) {
  return std::isfinite(v) ? fmt17(v) : "null";
}

}  // namespace stokesheat
