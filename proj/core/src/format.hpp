#pragma once

#include <cstdio>
#include <string>

namespace opdyn::detail {

// Round-trip exact, locale independent.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace opdyn::detail
