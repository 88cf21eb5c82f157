#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "brachy/config.hpp"
#include "brachy/plan.hpp"

namespace brachy {

inline constexpr int kPlanVersion = 1;

// Strict parse of a version 1 plan document. Numbers are canonicalized and
// needles are sorted by id. Every needle is resolved against the effective
// geometry (base overlaid with the plan's overrides).
//   ParseError(location, reason)    malformed JSON or schema violation
//   ValidationError(needle, reason) semantic constraint violated
Plan parse_plan(std::string_view bytes, const Config& base = {});
Plan plan_from_json(const nlohmann::json& doc, const Config& base = {});

nlohmann::json plan_to_json(const Plan& plan);

// Canonical bytes: sorted keys, needles ordered by id, shortest round-trip
// numbers after 15-significant-digit rounding, trailing newline.
std::string serialize_plan(const Plan& plan);

// base < plan overrides.
Config effective_config(const Config& base, const Plan& plan);

// Semantic validation used by parse_plan; exposed for programmatically built plans.
void validate_plan(const Plan& plan, const Config& base = {});

nlohmann::json profile_to_json(const MotionProfile& profile);
// Strict; validates speed and spin limits (ParseError on violation).
MotionProfile profile_from_json(const nlohmann::json& doc, const std::string& where = "/profile");

Plan load_plan_file(const std::string& path, const Config& base = {});

}  // namespace brachy
