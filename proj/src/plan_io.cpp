#include "brachy/plan_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "brachy/errors.hpp"
#include "brachy/workspace.hpp"
#include "json_util.hpp"

namespace brachy {

using detail::child;
using detail::json;

namespace {

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string line_column(std::string_view bytes, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < bytes.size(); ++i) {
    if (bytes[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

NeedleTarget target_from_json(const json& j, const std::string& where) {
  detail::require_object(j, where);
  const bool has_grid = j.contains("grid");
  const bool has_pose = j.contains("entry") || j.contains("pitch") || j.contains("yaw");
  if (has_grid && has_pose) throw ParseError(where, "grid and explicit pose targets are mutually exclusive");
  if (has_grid) {
    detail::reject_unknown(j, where, {"grid", "access"});
    const auto path = child(where, "grid");
    const json& g = j.at("grid");
    if (!g.is_array() || g.size() != 2) throw ParseError(path, "expected [col, row]");
    GridTarget t;
    t.col = detail::as_int(g[0], child(path, 0));
    t.row = detail::as_int(g[1], child(path, 1));
    if (auto it = j.find("access"); it != j.end()) {
      const auto mode = detail::as_string(*it, child(where, "access"));
      if (mode == "auto") {
        t.auto_access = true;
      } else if (mode != "none") {
        throw ParseError(child(where, "access"), "expected \"none\" or \"auto\"");
      }
    }
    return t;
  }
  if (has_pose) {
    detail::reject_unknown(j, where, {"entry", "pitch", "yaw"});
    const auto epath = child(where, "entry");
    const json& e = detail::require_field(j, where, "entry");
    if (!e.is_array() || e.size() != 2) throw ParseError(epath, "expected [x, y]");
    PoseTarget t;
    t.pose.entry_x = detail::as_number(e[0], child(epath, 0));
    t.pose.entry_y = detail::as_number(e[1], child(epath, 1));
    t.pose.pitch = detail::as_number(detail::require_field(j, where, "pitch"), child(where, "pitch"));
    t.pose.yaw = detail::as_number(detail::require_field(j, where, "yaw"), child(where, "yaw"));
    return t;
  }
  throw ParseError(where, "target needs either grid or entry/pitch/yaw");
}

json target_to_json(const NeedleTarget& target) {
  if (const auto* g = std::get_if<GridTarget>(&target)) {
    return json{{"grid", json::array({g->col, g->row})}, {"access", g->auto_access ? "auto" : "none"}};
  }
  const auto& p = std::get<PoseTarget>(target).pose;
  return json{{"entry", json::array({p.entry_x, p.entry_y})}, {"pitch", p.pitch}, {"yaw", p.yaw}};
}

NeedleTask needle_from_json(const json& j, const std::string& where) {
  detail::require_object(j, where);
  detail::reject_unknown(j, where, {"id", "target", "depth", "profile", "seeds"});
  NeedleTask n;
  n.id = detail::as_string(detail::require_field(j, where, "id"), child(where, "id"));
  n.target = target_from_json(detail::require_field(j, where, "target"), child(where, "target"));
  n.depth = detail::as_number(detail::require_field(j, where, "depth"), child(where, "depth"));
  if (auto it = j.find("profile"); it != j.end()) n.profile = profile_from_json(*it, child(where, "profile"));
  if (auto it = j.find("seeds"); it != j.end()) {
    const auto path = child(where, "seeds");
    if (!it->is_array()) throw ParseError(path, "expected an array");
    n.seeds.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto spath = child(path, i);
      const json& s = detail::require_object((*it)[i], spath);
      detail::reject_unknown(s, spath, {"offset_from_tip"});
      n.seeds.push_back(SeedSpec{
          detail::as_number(detail::require_field(s, spath, "offset_from_tip"), child(spath, "offset_from_tip"))});
    }
  }
  return n;
}

Obstacles obstacles_from_json(const json& j, const std::string& where) {
  detail::require_object(j, where);
  detail::reject_unknown(j, where, {"arch", "bone", "min_clearance"});
  Obstacles o;
  if (auto it = j.find("arch"); it != j.end()) {
    const auto path = child(where, "arch");
    if (!it->is_array()) throw ParseError(path, "expected an array of capsules");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto cpath = child(path, i);
      const json& c = detail::require_object((*it)[i], cpath);
      detail::reject_unknown(c, cpath, {"a", "b", "radius"});
      o.arch.capsules.push_back(Capsule{
          detail::as_vec3(detail::require_field(c, cpath, "a"), child(cpath, "a")),
          detail::as_vec3(detail::require_field(c, cpath, "b"), child(cpath, "b")),
          detail::as_number(detail::require_field(c, cpath, "radius"), child(cpath, "radius"))});
    }
  }
  if (auto it = j.find("bone"); it != j.end()) {
    const auto path = child(where, "bone");
    if (!it->is_array()) throw ParseError(path, "expected an array of bone obstacles");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto bpath = child(path, i);
      const json& b = detail::require_object((*it)[i], bpath);
      detail::reject_unknown(b, bpath, {"surface_z", "x", "y"});
      BoneObstacle bone;
      bone.surface_z = detail::as_number(detail::require_field(b, bpath, "surface_z"), child(bpath, "surface_z"));
      if (auto x = b.find("x"); x != b.end()) bone.x = detail::as_travel(*x, child(bpath, "x"));
      if (auto y = b.find("y"); y != b.end()) bone.y = detail::as_travel(*y, child(bpath, "y"));
      o.bone.push_back(bone);
    }
  }
  detail::read_number(j, where, "min_clearance", o.min_clearance);
  return o;
}

}  // namespace

json profile_to_json(const MotionProfile& p) {
  json rot;
  if (std::holds_alternative<NoRotation>(p.rotation)) {
    rot = {{"mode", "none"}};
  } else if (const auto* c = std::get_if<ContinuousRotation>(&p.rotation)) {
    rot = {{"mode", "continuous"}, {"omega", c->omega}};
  } else {
    const auto& i = std::get<IndexedRotation>(p.rotation);
    rot = {{"mode", "indexed"}, {"step", i.step}, {"interval", i.interval}};
  }
  return json{{"speed", p.insertion_speed}, {"rotation", rot}};
}

MotionProfile profile_from_json(const json& j, const std::string& where) {
  detail::require_object(j, where);
  detail::reject_unknown(j, where, {"speed", "rotation"});
  MotionProfile p;
  detail::read_number(j, where, "speed", p.insertion_speed);
  if (auto it = j.find("rotation"); it != j.end()) {
    const auto path = child(where, "rotation");
    detail::require_object(*it, path);
    const auto mode = detail::as_string(detail::require_field(*it, path, "mode"), child(path, "mode"));
    if (mode == "none") {
      detail::reject_unknown(*it, path, {"mode"});
      p.rotation = NoRotation{};
    } else if (mode == "continuous") {
      detail::reject_unknown(*it, path, {"mode", "omega"});
      ContinuousRotation c;
      detail::read_number(*it, path, "omega", c.omega);
      p.rotation = c;
    } else if (mode == "indexed") {
      detail::reject_unknown(*it, path, {"mode", "step", "interval"});
      IndexedRotation r;
      detail::read_number(*it, path, "step", r.step);
      detail::read_number(*it, path, "interval", r.interval);
      p.rotation = r;
    } else {
      throw ParseError(child(path, "mode"), "expected none, continuous or indexed");
    }
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(where, e.what());
  }
  return p;
}

Config effective_config(const Config& base, const Plan& plan) {
  Config c = base;
  apply_geometry_json(c.geometry, plan.geometry, "/geometry");
  apply_tissue_json(c.tissue, plan.tissue, "/tissue");
  apply_safety_json(c, plan.safety, "/safety");
  return c;
}

void validate_plan(const Plan& plan, const Config& base) {
  if (plan.version != kPlanVersion) {
    throw ValidationError("", "unsupported plan version " + std::to_string(plan.version));
  }
  const Config cfg = effective_config(base, plan);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError("", e.what());
  }
  const RobotGeometry& geom = cfg.geometry;

  for (const auto& c : plan.obstacles.arch.capsules) {
    if (!(c.radius > 0.0)) throw ValidationError("", "arch capsule radius must be > 0");
  }
  for (const auto& b : plan.obstacles.bone) {
    if (!(b.x.lo < b.x.hi) || !(b.y.lo < b.y.hi)) throw ValidationError("", "bone obstacle window is degenerate");
  }
  if (!(plan.obstacles.min_clearance >= 0.0)) throw ValidationError("", "min_clearance must be >= 0");

  std::set<std::string> seen;
  for (const auto& n : plan.needles) {
    if (n.id.empty()) throw ValidationError("", "needle id must be non-empty");
    if (!seen.insert(n.id).second) throw ValidationError(n.id, "duplicate needle id");
    if (!(n.depth > 0.0)) throw ValidationError(n.id, "depth must be > 0");
    if (n.depth > geom.insertion_travel.hi) {
      throw ValidationError(n.id, "depth exceeds insertion travel " + fmt_num(geom.insertion_travel.hi));
    }
    try {
      n.profile.validate();
    } catch (const std::invalid_argument& e) {
      throw ValidationError(n.id, e.what());
    }
    if (n.seeds.empty()) throw ValidationError(n.id, "at least one seed is required");
    for (const auto& s : n.seeds) {
      if (!(s.offset_from_tip >= 0.0) || s.offset_from_tip > n.depth) {
        throw ValidationError(n.id, "seed offset must be within [0, depth]");
      }
    }
    try {
      resolve_needle(n, plan, geom);
    } catch (const Error& e) {
      throw ValidationError(n.id, e.code() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ValidationError(n.id, e.what());
    }
  }
}

Plan plan_from_json(const json& input, const Config& base) {
  json doc = input;
  detail::canonicalize_numbers(doc);
  detail::require_object(doc, "");
  detail::reject_unknown(doc, "", {"version", "geometry", "tissue", "safety", "obstacles", "needles", "metadata"});

  Plan plan;
  plan.version = detail::as_int(detail::require_field(doc, "", "version"), "/version");
  if (plan.version != kPlanVersion) {
    throw ValidationError("", "unsupported plan version " + std::to_string(plan.version));
  }
  // Overrides are checked field by field against a scratch config.
  Config scratch = base;
  if (auto it = doc.find("geometry"); it != doc.end()) {
    apply_geometry_json(scratch.geometry, *it, "/geometry");
    plan.geometry = *it;
  }
  if (auto it = doc.find("tissue"); it != doc.end()) {
    apply_tissue_json(scratch.tissue, *it, "/tissue");
    plan.tissue = *it;
  }
  if (auto it = doc.find("safety"); it != doc.end()) {
    apply_safety_json(scratch, *it, "/safety");
    plan.safety = *it;
  }
  if (auto it = doc.find("obstacles"); it != doc.end()) plan.obstacles = obstacles_from_json(*it, "/obstacles");

  const json& needles = detail::require_field(doc, "", "needles");
  if (!needles.is_array()) throw ParseError("/needles", "expected an array");
  for (std::size_t i = 0; i < needles.size(); ++i) {
    plan.needles.push_back(needle_from_json(needles[i], child("/needles", i)));
  }
  std::stable_sort(plan.needles.begin(), plan.needles.end(),
                   [](const NeedleTask& a, const NeedleTask& b) { return a.id < b.id; });

  if (auto it = doc.find("metadata"); it != doc.end()) {
    detail::require_object(*it, "/metadata");
    detail::reject_unknown(*it, "/metadata", {"shifts"});
    if (auto s = it->find("shifts"); s != it->end()) {
      if (!s->is_array()) throw ParseError("/metadata/shifts", "expected an array");
      for (std::size_t i = 0; i < s->size(); ++i) {
        plan.metadata.shifts.push_back(detail::as_vec3((*s)[i], child("/metadata/shifts", i)));
      }
    }
  }

  validate_plan(plan, base);
  return plan;
}

Plan parse_plan(std::string_view bytes, const Config& base) {
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    std::string reason = e.what();
    if (auto pos = reason.find("syntax error"); pos != std::string::npos) reason = reason.substr(pos);
    throw ParseError(line_column(bytes, e.byte), reason);
  } catch (const json::exception& e) {
    throw ParseError("/", e.what());
  }
  try {
    return plan_from_json(doc, base);
  } catch (const json::exception& e) {
    throw ParseError("/", e.what());
  }
}

json plan_to_json(const Plan& plan) {
  std::vector<const NeedleTask*> ordered;
  for (const auto& n : plan.needles) ordered.push_back(&n);
  std::stable_sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->id < b->id; });

  json needles = json::array();
  for (const auto* n : ordered) {
    json seeds = json::array();
    for (const auto& s : n->seeds) seeds.push_back({{"offset_from_tip", s.offset_from_tip}});
    needles.push_back({{"id", n->id},
                       {"target", target_to_json(n->target)},
                       {"depth", n->depth},
                       {"profile", profile_to_json(n->profile)},
                       {"seeds", seeds}});
  }
  json arch = json::array();
  for (const auto& c : plan.obstacles.arch.capsules) {
    arch.push_back({{"a", detail::to_json(c.a)}, {"b", detail::to_json(c.b)}, {"radius", c.radius}});
  }
  json bone = json::array();
  for (const auto& b : plan.obstacles.bone) {
    bone.push_back({{"surface_z", b.surface_z}, {"x", detail::to_json(b.x)}, {"y", detail::to_json(b.y)}});
  }
  json shifts = json::array();
  for (const auto& s : plan.metadata.shifts) shifts.push_back(detail::to_json(s));

  json doc{{"version", plan.version},
           {"geometry", plan.geometry},
           {"tissue", plan.tissue},
           {"safety", plan.safety},
           {"obstacles", {{"arch", arch}, {"bone", bone}, {"min_clearance", plan.obstacles.min_clearance}}},
           {"needles", needles},
           {"metadata", {{"shifts", shifts}}}};
  detail::canonicalize_numbers(doc);
  return doc;
}

std::string serialize_plan(const Plan& plan) { return plan_to_json(plan).dump(2) + "\n"; }

Plan load_plan_file(const std::string& path, const Config& base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, "cannot open plan file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_plan(ss.str(), base);
}

}  // namespace brachy
