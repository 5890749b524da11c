#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "skewdiff/common.hpp"

namespace skewdiff {

/// Rejects any key of object `j` that is not listed; `where` names the context.
inline void expect_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                        const std::string& where) {
  require(j.is_object(), where + ": expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    require(ok, where + ": unknown key '" + key + "'");
  }
}

/// +inf is written as the string "inf" so that the document stays valid JSON.
inline nlohmann::json json_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double real_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw DomainError("expected a number, got string '" + s + "'");
  }
  require(j.is_number(), "expected a number");
  return j.get<double>();
}

}  // namespace skewdiff
