#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace skewdiff {

/// Shortest representation that parses back to the same double.
inline std::string format_real(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc{}) return "nan";
  return std::string(buf, res.ptr);
}

}  // namespace skewdiff
