// io.hpp — deterministic text formatting helpers
//
// All numeric artifact output goes through shortest-round-trip formatting
// (std::to_chars), so identical inputs produce byte-identical files.

#pragma once

#include <charconv>
#include <cstdint>
#include <string>

namespace rodlearn {

inline std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string fmt_int(std::int64_t v) { return std::to_string(v); }

}  // namespace rodlearn
