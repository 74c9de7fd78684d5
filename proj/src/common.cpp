#include "mirrorquant/common.hpp"

#include <cstdio>

namespace mirrorquant {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace mirrorquant
