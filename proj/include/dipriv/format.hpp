#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace dipriv {

/// Shortest text form of a double that round-trips exactly (%.17g trimmed).
/// Every CSV and serialized parameter in this library goes through here so
/// that identical values always produce identical bytes.
inline std::string format_double(double v) {
  char buf[40];
  // Try increasing precision until the value round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace dipriv
