#pragma once

// Strict JSON field access shared by the config, plan and log readers.

#include <cmath>
#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "brachy/errors.hpp"
#include "brachy/kinematics.hpp"

namespace brachy::detail {

using nlohmann::json;

inline std::string child(const std::string& where, std::string_view key) { return where + "/" + std::string(key); }
inline std::string child(const std::string& where, std::size_t index) { return where + "/" + std::to_string(index); }

inline const json& require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where.empty() ? "/" : where, "expected an object");
  return j;
}

inline void reject_unknown(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (auto a : allowed) known = known || it.key() == a;
    if (!known) throw ParseError(child(where, it.key()), "unknown field");
  }
}

inline const json& require_field(const json& j, const std::string& where, std::string_view key) {
  auto it = j.find(std::string(key));
  if (it == j.end()) throw ParseError(child(where, key), "missing required field");
  return *it;
}

inline double as_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ParseError(where, "number is not finite");
  return v;
}

inline int as_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ParseError(where, "expected an integer");
  const auto v = j.get<long long>();
  if (v < -1'000'000'000LL || v > 1'000'000'000LL) throw ParseError(where, "integer out of range");
  return static_cast<int>(v);
}

inline std::string as_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw ParseError(where, "expected a string");
  return j.get<std::string>();
}

inline bool as_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) throw ParseError(where, "expected a boolean");
  return j.get<bool>();
}

inline void read_number(const json& obj, const std::string& where, std::string_view key, double& out) {
  if (auto it = obj.find(std::string(key)); it != obj.end()) out = as_number(*it, child(where, key));
}

inline Travel as_travel(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw ParseError(where, "expected [lo, hi]");
  return Travel{as_number(j[0], child(where, 0)), as_number(j[1], child(where, 1))};
}

inline Vec3 as_vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ParseError(where, "expected [x, y, z]");
  return Vec3(as_number(j[0], child(where, 0)), as_number(j[1], child(where, 1)), as_number(j[2], child(where, 2)));
}

inline json to_json(const Travel& t) { return json::array({t.lo, t.hi}); }
inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

// Rounds to 15 significant digits so serialized numbers print in their
// shortest form (0.30000000000000004 -> 0.3).
double canonical_double(double v);

// Applies canonical_double to every floating-point number in the document.
void canonicalize_numbers(json& j);

}  // namespace brachy::detail
