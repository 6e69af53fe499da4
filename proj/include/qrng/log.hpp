#pragma once

#include <cstdio>

namespace qrng::detail {

inline void warn(const char* msg) { std::fprintf(stderr, "qrng: warning: %s\n", msg); }

}  // namespace qrng::detail
