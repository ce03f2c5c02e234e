#pragma once

#include <cmath>
#include <vector>

#include <json.hpp>

#include "rliq/field.hpp"

namespace rliq {

/// JSON number, or the strings "inf" / "-inf" / "nan" where JSON has no literal.
inline nlohmann::json json_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

inline double number_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    return NAN;
  }
  return j.get<double>();
}

inline nlohmann::json json_point(const Point& y) {
  auto a = nlohmann::json::array();
  for (int i = 0; i < y.size(); ++i) a.push_back(y[i]);
  return a;
}

inline nlohmann::json json_numbers(const std::vector<double>& v) {
  auto a = nlohmann::json::array();
  for (double x : v) a.push_back(json_number(x));
  return a;
}

}  // namespace rliq
