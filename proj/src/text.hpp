#pragma once

#include <cstdio>
#include <string>

namespace geob::detail {

// Shortest form that still round-trips a double exactly.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace geob::detail
