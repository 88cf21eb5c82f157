#include "json_util.hpp"

#include <charconv>
#include <cstdlib>

namespace brachy::detail {

double canonical_double(double v) {
  if (!std::isfinite(v) || v == 0.0) return v == 0.0 ? 0.0 : v;
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 15);
  *res.ptr = '\0';
  return std::strtod(buf, nullptr);
}

void canonicalize_numbers(json& j) {
  if (j.is_number_float()) {
    j = canonical_double(j.get<double>());
  } else if (j.is_structured()) {
    for (auto& child : j) canonicalize_numbers(child);
  }
}

}  // namespace brachy::detail
