#include "brachy/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json_util.hpp"

namespace brachy {

using detail::child;
using detail::json;

void Config::validate() const {
  geometry.validate();
  tissue.validate();
  if (!(release_threshold > tissue.F_punct)) {
    throw std::invalid_argument("release_threshold must exceed the puncture force F_punct");
  }
  if (!(controller.tick_dt > 0.0)) throw std::invalid_argument("tick_dt must be > 0");
  if (!(controller.positioning_speed > 0.0) || !(controller.retract_speed > 0.0)) {
    throw std::invalid_argument("joint speeds must be > 0");
  }
  if (controller.settle_ticks < 1) throw std::invalid_argument("settle_ticks must be >= 1");
}

json config_to_json(const Config& c) {
  const auto& g = c.geometry;
  const auto& t = c.tissue;
  return json{
      {"geometry",
       {{"baseline_L", g.baseline_L},
        {"front_travel", detail::to_json(g.front_travel)},
        {"rear_travel", detail::to_json(g.rear_travel)},
        {"z_travel", detail::to_json(g.z_travel)},
        {"insertion_travel", detail::to_json(g.insertion_travel)},
        {"guide_standoff", g.guide_standoff},
        {"max_inclination", g.max_inclination},
        {"joint_resolution_linear", g.joint_resolution_linear},
        {"joint_resolution_rotation", g.joint_resolution_rotation},
        {"calibration_error_bound", g.calibration_error_bound},
        {"needle_gauge", std::string(to_string(g.needle_gauge))}}},
      {"tissue",
       {{"k_load", t.k_load},
        {"F_punct", t.F_punct},
        {"F_cut", t.F_cut},
        {"mu_fric", t.mu_fric},
        {"omega_ref", t.omega_ref},
        {"rot_reduction", t.rot_reduction},
        {"v_lo", t.v_lo},
        {"v_hi", t.v_hi},
        {"vel_reduction", t.vel_reduction},
        {"k_prostate", t.k_prostate},
        {"k_bone", t.k_bone},
        {"tissue_plane_z", t.tissue_plane_z}}},
      {"safety", {{"release_threshold", c.release_threshold}}},
      {"controller",
       {{"tick_dt", c.controller.tick_dt},
        {"positioning_speed", c.controller.positioning_speed},
        {"retract_speed", c.controller.retract_speed},
        {"settle_ticks", c.controller.settle_ticks},
        {"rotate_during_retract", c.controller.rotate_during_retract}}},
  };
}

void apply_geometry_json(RobotGeometry& g, const json& doc, const std::string& where) {
  detail::require_object(doc, where);
  detail::reject_unknown(doc, where,
                         {"baseline_L", "front_travel", "rear_travel", "z_travel", "insertion_travel", "guide_standoff",
                          "max_inclination", "joint_resolution_linear", "joint_resolution_rotation",
                          "calibration_error_bound", "needle_gauge"});
  detail::read_number(doc, where, "baseline_L", g.baseline_L);
  detail::read_number(doc, where, "guide_standoff", g.guide_standoff);
  detail::read_number(doc, where, "max_inclination", g.max_inclination);
  detail::read_number(doc, where, "joint_resolution_linear", g.joint_resolution_linear);
  detail::read_number(doc, where, "joint_resolution_rotation", g.joint_resolution_rotation);
  detail::read_number(doc, where, "calibration_error_bound", g.calibration_error_bound);
  auto travel = [&](const char* key, Travel& out) {
    if (auto it = doc.find(key); it != doc.end()) out = detail::as_travel(*it, child(where, key));
  };
  travel("front_travel", g.front_travel);
  travel("rear_travel", g.rear_travel);
  travel("z_travel", g.z_travel);
  travel("insertion_travel", g.insertion_travel);
  if (auto it = doc.find("needle_gauge"); it != doc.end()) {
    const auto path = child(where, "needle_gauge");
    try {
      g.needle_gauge = gauge_from_string(detail::as_string(*it, path));
    } catch (const std::invalid_argument& e) {
      throw ParseError(path, e.what());
    }
  }
}

void apply_tissue_json(TissueParams& t, const json& doc, const std::string& where) {
  detail::require_object(doc, where);
  detail::reject_unknown(doc, where,
                         {"k_load", "F_punct", "F_cut", "mu_fric", "omega_ref", "rot_reduction", "v_lo", "v_hi",
                          "vel_reduction", "k_prostate", "k_bone", "tissue_plane_z"});
  detail::read_number(doc, where, "k_load", t.k_load);
  detail::read_number(doc, where, "F_punct", t.F_punct);
  detail::read_number(doc, where, "F_cut", t.F_cut);
  detail::read_number(doc, where, "mu_fric", t.mu_fric);
  detail::read_number(doc, where, "omega_ref", t.omega_ref);
  detail::read_number(doc, where, "rot_reduction", t.rot_reduction);
  detail::read_number(doc, where, "v_lo", t.v_lo);
  detail::read_number(doc, where, "v_hi", t.v_hi);
  detail::read_number(doc, where, "vel_reduction", t.vel_reduction);
  detail::read_number(doc, where, "k_prostate", t.k_prostate);
  detail::read_number(doc, where, "k_bone", t.k_bone);
  detail::read_number(doc, where, "tissue_plane_z", t.tissue_plane_z);
}

void apply_safety_json(Config& c, const json& doc, const std::string& where) {
  detail::require_object(doc, where);
  detail::reject_unknown(doc, where, {"release_threshold"});
  detail::read_number(doc, where, "release_threshold", c.release_threshold);
}

void apply_config_json(Config& c, const json& doc, const std::string& where) {
  detail::require_object(doc, where);
  detail::reject_unknown(doc, where, {"geometry", "tissue", "safety", "controller"});
  if (auto it = doc.find("geometry"); it != doc.end()) apply_geometry_json(c.geometry, *it, child(where, "geometry"));
  if (auto it = doc.find("tissue"); it != doc.end()) apply_tissue_json(c.tissue, *it, child(where, "tissue"));
  if (auto it = doc.find("safety"); it != doc.end()) apply_safety_json(c, *it, child(where, "safety"));
  if (auto it = doc.find("controller"); it != doc.end()) {
    const auto path = child(where, "controller");
    const json& s = detail::require_object(*it, path);
    detail::reject_unknown(s, path,
                           {"tick_dt", "positioning_speed", "retract_speed", "settle_ticks", "rotate_during_retract"});
    detail::read_number(s, path, "tick_dt", c.controller.tick_dt);
    detail::read_number(s, path, "positioning_speed", c.controller.positioning_speed);
    detail::read_number(s, path, "retract_speed", c.controller.retract_speed);
    if (auto f = s.find("settle_ticks"); f != s.end()) {
      c.controller.settle_ticks = detail::as_int(*f, child(path, "settle_ticks"));
    }
    if (auto f = s.find("rotate_during_retract"); f != s.end()) {
      c.controller.rotate_during_retract = detail::as_bool(*f, child(path, "rotate_during_retract"));
    }
  }
}

Config load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  json doc;
  try {
    doc = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ParseError(path, e.what());
  }
  Config c;
  apply_config_json(c, doc);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError("", e.what());
  }
  return c;
}

}  // namespace brachy
