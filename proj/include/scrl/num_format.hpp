#pragma once

#include <cstdio>
#include <string>

namespace scrl {

// Decimal formatting that round-trips IEEE doubles exactly (17 significant
// digits).  Used everywhere a double is written to disk so that re-parsing a
// file restores bit-identical values.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf);
}

}  // namespace scrl
