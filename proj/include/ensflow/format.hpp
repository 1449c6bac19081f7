#pragma once

#include <cstdio>
#include <string>

namespace ensflow {

/// Round-trip representation (17 significant digits).
inline std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

}  // namespace ensflow
