#pragma once

#include <cstdio>
#include <string>

namespace refugia::harness {

/// 17 significant digits: round-trips every double.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace refugia::harness
