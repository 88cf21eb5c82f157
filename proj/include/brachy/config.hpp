#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "brachy/kinematics.hpp"
#include "brachy/tissue.hpp"

namespace brachy {

struct ControllerSettings {
  double tick_dt = 0.001;            // s
  double positioning_speed = 10.0;   // mm/s per positioning joint
  double retract_speed = 5.0;        // mm/s
  int settle_ticks = 10;
  bool rotate_during_retract = false;

  bool operator==(const ControllerSettings&) const = default;
};

struct Config {
  RobotGeometry geometry;
  TissueParams tissue;
  double release_threshold = 8.0;  // N
  ControllerSettings controller;

  // Throws std::invalid_argument.
  void validate() const;
  bool operator==(const Config&) const = default;
};

// Full config as JSON with sections geometry, tissue, safety, controller.
nlohmann::json config_to_json(const Config& c);

// Overlays a (partial) config document. Unknown keys and wrong types raise
// ParseError with a JSON-pointer location under `where`.
void apply_config_json(Config& c, const nlohmann::json& doc, const std::string& where = "");

// Individual section overlays, shared with plan overrides.
void apply_geometry_json(RobotGeometry& g, const nlohmann::json& doc, const std::string& where);
void apply_tissue_json(TissueParams& t, const nlohmann::json& doc, const std::string& where);
void apply_safety_json(Config& c, const nlohmann::json& doc, const std::string& where);

Config load_config_file(const std::string& path);

}  // namespace brachy
