#pragma once

#include <cstdio>
#include <ostream>
#include <string>

namespace cmv::csv {

/// Shortest text that round-trips: 17 significant digits.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_value(std::ostream& os, double x) { os << format_double(x); }

}  // namespace cmv::csv
