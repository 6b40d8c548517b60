#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>

namespace osmc {

// Shortest round-trip decimal form; reruns of the same build produce
// byte-identical output files.
inline std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline std::string format_u64(std::uint64_t value) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

}  // namespace osmc
