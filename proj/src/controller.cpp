#include "brachy/controller.hpp"

#include <algorithm>
#include <cmath>

#include "brachy/errors.hpp"
#include "brachy/plan_io.hpp"
#include "json_util.hpp"

namespace brachy {

using detail::json;

namespace {

constexpr std::array<std::string_view, 13> kPhaseNames{
    "IDLE",       "PLAN_LOADED", "POSITIONING",    "PREPOSITIONED",    "INSERTING", "AT_DEPTH", "HUB_OPEN",
    "SEED_PLACED", "RETRACTING", "NEEDLE_DONE", "SAFETY_TRIPPED", "EMERGENCY_MANUAL", "COMPLETE",
};

constexpr std::array<std::string_view, 15> kCommandNames{
    "load_plan",     "select_needle", "go_position", "go_insert", "release_hub", "clamp_hub", "confirm_seed", "retract",
    "next_needle",   "set_threshold", "apply_shift", "e_stop",    "manual_retract", "rehome", "reset",
};

using P = Phase;
using C = CommandKind;

const std::vector<TransitionRule> kRules{
    {P::Idle, C::LoadPlan, "PLAN_LOADED|COMPLETE", "plan parses and validates; COMPLETE when it has no needles"},
    {P::Idle, C::SetThreshold, "IDLE", "threshold > F_punct"},
    {P::Idle, C::Reset, "IDLE", "d_ins = 0"},
    {P::Idle, C::EStop, "EMERGENCY_MANUAL", ""},

    {P::PlanLoaded, C::SelectNeedle, "PLAN_LOADED", "needle exists and is pending"},
    {P::PlanLoaded, C::NextNeedle, "PLAN_LOADED|COMPLETE", "COMPLETE when no needle is pending"},
    {P::PlanLoaded, C::GoPosition, "POSITIONING", "a pending needle is selected"},
    {P::PlanLoaded, C::SetThreshold, "PLAN_LOADED", "threshold > F_punct"},
    {P::PlanLoaded, C::ApplyShift, "PLAN_LOADED", "every shifted needle stays within travel"},
    {P::PlanLoaded, C::Reset, "IDLE", "d_ins = 0"},
    {P::PlanLoaded, C::EStop, "EMERGENCY_MANUAL", ""},

    {P::Positioning, C::EStop, "EMERGENCY_MANUAL", ""},

    {P::Prepositioned, C::GoInsert, "INSERTING", "hub clamped; profile within limits"},
    {P::Prepositioned, C::ApplyShift, "POSITIONING", "every shifted needle stays within travel"},
    {P::Prepositioned, C::SetThreshold, "PREPOSITIONED", "threshold > F_punct"},
    {P::Prepositioned, C::EStop, "EMERGENCY_MANUAL", ""},

    {P::Inserting, C::Retract, "RETRACTING", ""},
    {P::Inserting, C::EStop, "EMERGENCY_MANUAL", ""},

    {P::AtDepth, C::ReleaseHub, "HUB_OPEN", ""},
    {P::AtDepth, C::Retract, "RETRACTING", ""},
    {P::AtDepth, C::EStop, "EMERGENCY_MANUAL", ""},

    {P::HubOpen, C::ConfirmSeed, "HUB_OPEN|SEED_PLACED", "SEED_PLACED after the needle's last seed"},
    {P::HubOpen, C::ClampHub, "AT_DEPTH", ""},
    {P::HubOpen, C::EStop, "EMERGENCY_MANUAL", ""},

    {P::SeedPlaced, C::ClampHub, "SEED_PLACED", ""},
    {P::SeedPlaced, C::Retract, "RETRACTING", "hub clamped"},
    {P::SeedPlaced, C::EStop, "EMERGENCY_MANUAL", ""},

    {P::Retracting, C::EStop, "EMERGENCY_MANUAL", ""},

    {P::NeedleDone, C::SelectNeedle, "PLAN_LOADED", "needle exists and is pending"},
    {P::NeedleDone, C::NextNeedle, "PLAN_LOADED|COMPLETE", "COMPLETE when no needle is pending"},
    {P::NeedleDone, C::ApplyShift, "NEEDLE_DONE", "every shifted needle stays within travel"},
    {P::NeedleDone, C::SetThreshold, "NEEDLE_DONE", "threshold > F_punct"},
    {P::NeedleDone, C::Reset, "IDLE", "d_ins = 0"},
    {P::NeedleDone, C::EStop, "EMERGENCY_MANUAL", ""},

    {P::SafetyTripped, C::ManualRetract, "SAFETY_TRIPPED", "mm >= 0"},
    {P::SafetyTripped, C::Rehome, "PLAN_LOADED", "d_ins = 0"},
    {P::SafetyTripped, C::EStop, "EMERGENCY_MANUAL", ""},

    {P::EmergencyManual, C::ManualRetract, "EMERGENCY_MANUAL", "mm >= 0"},
    {P::EmergencyManual, C::Rehome, "PLAN_LOADED|IDLE", "d_ins = 0; IDLE when no plan is loaded"},
    {P::EmergencyManual, C::Reset, "IDLE", "d_ins = 0"},
    {P::EmergencyManual, C::EStop, "EMERGENCY_MANUAL", ""},

    {P::Complete, C::Reset, "IDLE", "d_ins = 0"},
    {P::Complete, C::EStop, "EMERGENCY_MANUAL", ""},
};

// Phase changes driven by the simulation clock rather than a command.
struct TickTransition {
  Phase from;
  Phase to;
  std::string_view when;
};

const std::vector<TickTransition> kTickTransitions{
    {P::Positioning, P::Prepositioned, "joints settled at their setpoints"},
    {P::Inserting, P::AtDepth, "insertion setpoint reached"},
    {P::Inserting, P::SafetyTripped, "axial force > release_threshold"},
    {P::Retracting, P::NeedleDone, "d_ins = 0"},
};

json joints_json(const JointState& j) {
  return json{{"xf", j.xf},       {"yf", j.yf},       {"xr", j.xr},       {"yr", j.yr},
              {"z_pre", j.z_pre}, {"d_ins", j.d_ins}, {"theta", j.theta}};
}

json pose_json(const NeedlePose& p) {
  return json{{"entry_x", p.entry_x}, {"entry_y", p.entry_y}, {"pitch", p.pitch}, {"yaw", p.yaw}};
}

double step_toward(double current, double target, double max_step) {
  const double diff = target - current;
  if (std::abs(diff) <= max_step) return target;
  return current + std::copysign(max_step, diff);
}

}  // namespace

std::string_view to_string(Phase p) noexcept { return kPhaseNames[static_cast<std::size_t>(p)]; }

std::string_view to_string(HubState h) noexcept { return h == HubState::Clamped ? "CLAMPED" : "OPEN"; }

std::string_view to_string(CommandKind c) noexcept { return kCommandNames[static_cast<std::size_t>(c)]; }

std::optional<Phase> phase_from_string(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kPhaseNames.size(); ++i) {
    if (kPhaseNames[i] == s) return static_cast<Phase>(i);
  }
  return std::nullopt;
}

std::optional<CommandKind> command_from_string(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kCommandNames.size(); ++i) {
    if (kCommandNames[i] == s) return static_cast<CommandKind>(i);
  }
  return std::nullopt;
}

void validate_command_args(CommandKind kind, const json& args) {
  const std::string where = "/args";
  detail::require_object(args, where);
  switch (kind) {
    case C::LoadPlan:
      detail::reject_unknown(args, where, {"plan"});
      detail::require_object(detail::require_field(args, where, "plan"), where + "/plan");
      break;
    case C::SelectNeedle:
      detail::reject_unknown(args, where, {"id"});
      detail::as_string(detail::require_field(args, where, "id"), where + "/id");
      break;
    case C::GoInsert:
      detail::reject_unknown(args, where, {"profile"});
      if (args.contains("profile")) detail::require_object(args["profile"], where + "/profile");
      break;
    case C::SetThreshold:
      detail::reject_unknown(args, where, {"threshold"});
      detail::as_number(detail::require_field(args, where, "threshold"), where + "/threshold");
      break;
    case C::ApplyShift:
      detail::reject_unknown(args, where, {"dx", "dy", "dz"});
      for (const char* k : {"dx", "dy", "dz"}) {
        detail::as_number(detail::require_field(args, where, k), detail::child(where, k));
      }
      break;
    case C::ManualRetract:
      detail::reject_unknown(args, where, {"mm"});
      detail::as_number(detail::require_field(args, where, "mm"), where + "/mm");
      break;
    default:
      detail::reject_unknown(args, where, {});
      break;
  }
}

Command command_from_json(const json& doc) {
  detail::require_object(doc, "");
  Command c;
  const std::string name = detail::as_string(detail::require_field(doc, "", "cmd"), "/cmd");
  const auto kind = command_from_string(name);
  if (!kind) throw ParseError("/cmd", "unknown command '" + name + "'");
  c.kind = *kind;
  if (auto it = doc.find("args"); it != doc.end() && !it->is_null()) c.args = *it;
  validate_command_args(c.kind, c.args);
  return c;
}

const std::vector<TransitionRule>& transition_rules() { return kRules; }

bool is_legal(Phase phase, CommandKind command) noexcept {
  return std::any_of(kRules.begin(), kRules.end(),
                     [&](const TransitionRule& r) { return r.from == phase && r.command == command; });
}

json transition_table_json() {
  json phases = json::array();
  for (Phase p : kAllPhases) phases.push_back(to_string(p));
  json commands = json::array();
  for (CommandKind c : kAllCommands) commands.push_back(to_string(c));

  json legal = json::object();
  for (Phase p : kAllPhases) {
    json list = json::array();
    for (CommandKind c : kAllCommands) {
      if (is_legal(p, c)) list.push_back(to_string(c));
    }
    legal[std::string(to_string(p))] = std::move(list);
  }

  json rules = json::array();
  for (const auto& r : kRules) {
    json to = json::array();
    std::string_view rest = r.to;
    while (!rest.empty()) {
      const auto bar = rest.find('|');
      to.push_back(rest.substr(0, bar));
      rest = bar == std::string_view::npos ? std::string_view{} : rest.substr(bar + 1);
    }
    rules.push_back(json{{"from", to_string(r.from)}, {"command", to_string(r.command)}, {"to", to}, {"guard", r.guard}});
  }

  json ticks = json::array();
  for (const auto& t : kTickTransitions) {
    ticks.push_back(json{{"from", to_string(t.from)}, {"to", to_string(t.to)}, {"when", t.when}});
  }

  return json{{"version", 1},
              {"initial", "IDLE"},
              {"phases", phases},
              {"commands", commands},
              {"legal", legal},
              {"rules", rules},
              {"tick_transitions", ticks},
              {"rejections", {{"INSERTING", {{"release_hub", "hub locked during insertion"}}}}}};
}

json TelemetryFrame::to_json() const {
  return json{{"tick", tick},
              {"sim_time", sim_time},
              {"phase", brachy::to_string(phase)},
              {"needle", needle ? json(*needle) : json(nullptr)},
              {"hub", brachy::to_string(hub)},
              {"joints", joints_json(joints)},
              {"pose", pose_json(pose)},
              {"inclination", inclination},
              {"tip", detail::to_json(tip)},
              {"axial_force", axial_force},
              {"peak_force", peak_force},
              {"mean_force", mean_force},
              {"prostate_displacement", prostate_displacement},
              {"tissue", {{"tip_depth", tissue_depth}, {"punctured", punctured}}},
              {"engagement",
               {{"status", brachy::to_string(engagement.status)},
                {"trip_force", engagement.trip_force},
                {"release_threshold", engagement.release_threshold}}}};
}

std::string TelemetryFrame::digest() const { return fnv1a_hex(to_json().dump()); }

Controller::Controller(Config base) : base_(std::move(base)), config_(base_) {
  base_.validate();
  state_.engagement.release_threshold = config_.release_threshold;
}

CommandResult Controller::reject(std::string code, std::string reason) const {
  return CommandResult{false, std::move(code), std::move(reason)};
}

void Controller::log_event(std::string kind, json payload) {
  if (deferring_) {
    deferred_.emplace_back(std::move(kind), std::move(payload));
    return;
  }
  log_.append(state_.tick, state_.sim_time, std::move(kind), std::move(payload));
}

void Controller::transition(Phase to, std::string_view cause) {
  const Phase from = state_.phase;
  state_.phase = to;
  if (from != to) log_event("transition", json{{"from", to_string(from)}, {"to", to_string(to)}, {"cause", cause}});
}

CommandResult Controller::handle(const Command& cmd) {
  const Phase from = state_.phase;
  deferring_ = true;
  CommandResult r = apply(cmd);
  deferring_ = false;

  json payload{{"cmd", to_string(cmd.kind)}, {"args", cmd.args}, {"ok", r.ok},
               {"from", to_string(from)},    {"to", to_string(state_.phase)}};
  if (!r.ok) {
    payload["code"] = r.code;
    payload["reason"] = r.reason;
  }
  if (!cmd.client.empty()) payload["client"] = cmd.client;

  // The command record precedes whatever it caused.
  auto caused = std::move(deferred_);
  deferred_.clear();
  log_.append(state_.tick, state_.sim_time, "command", std::move(payload));
  for (auto& [kind, body] : caused) log_.append(state_.tick, state_.sim_time, std::move(kind), std::move(body));
  return r;
}

CommandResult Controller::apply(const Command& cmd) {
  const Phase phase = state_.phase;
  if (!is_legal(phase, cmd.kind)) {
    if (phase == P::Inserting && cmd.kind == C::ReleaseHub) return reject("hub_locked", "hub locked during insertion");
    return reject("illegal_in_phase",
                  std::string(to_string(cmd.kind)) + " not permitted in phase " + std::string(to_string(phase)));
  }
  try {
    validate_command_args(cmd.kind, cmd.args);
  } catch (const ParseError& e) {
    return reject("bad_args", e.what());
  }

  const double d_ins = state_.joints.d_ins;
  switch (cmd.kind) {
    case C::LoadPlan: {
      Plan plan;
      Config cfg;
      try {
        plan = plan_from_json(cmd.args["plan"], base_);
        cfg = effective_config(base_, plan);
      } catch (const Error& e) {
        return reject("invalid_plan", e.what());
      }
      if (threshold_override_ && !(*threshold_override_ > cfg.tissue.F_punct)) {
        return reject("threshold_too_low", "release threshold must exceed the plan's puncture force");
      }
      config_ = cfg;
      plan_ = std::move(plan);
      status_.clear();
      for (const auto& n : plan_->needles) status_[n.id] = NeedleStatus::Pending;
      state_.current_needle.reset();
      active_.reset();
      state_.engagement = EngagementState{};
      state_.engagement.release_threshold = threshold_override_.value_or(config_.release_threshold);
      clear_tissue();
      reset_insertion_stats();
      if (plan_->needles.empty()) {
        transition(P::Complete, "load_plan");
        log_event("complete", json{{"needles", 0}});
      } else {
        transition(P::PlanLoaded, "load_plan");
      }
      return {};
    }

    case C::SelectNeedle: {
      const std::string id = cmd.args["id"].get<std::string>();
      auto it = status_.find(id);
      if (it == status_.end()) return reject("unknown_needle", "no needle '" + id + "' in the plan");
      if (it->second == NeedleStatus::Done) return reject("needle_done", "needle '" + id + "' is already done");
      state_.current_needle = id;
      transition(P::PlanLoaded, "select_needle");
      return {};
    }

    case C::NextNeedle: {
      if (complete_if_done()) return {};
      for (const auto& n : plan_->needles) {
        if (status_.at(n.id) == NeedleStatus::Pending) {
          state_.current_needle = n.id;
          break;
        }
      }
      transition(P::PlanLoaded, "next_needle");
      return {};
    }

    case C::GoPosition: {
      if (!state_.current_needle) return reject("no_needle_selected", "select a needle first");
      if (status_.at(*state_.current_needle) == NeedleStatus::Done) {
        return reject("needle_done", "needle '" + *state_.current_needle + "' is already done");
      }
      try {
        begin_positioning(resolve_needle(*plan_->find(*state_.current_needle), *plan_, config_.geometry));
      } catch (const Error& e) {
        return reject(e.code(), e.what());
      }
      transition(P::Positioning, "go_position");
      return {};
    }

    case C::GoInsert: {
      if (state_.hub != HubState::Clamped) return reject("hub_open", "hub must be clamped to insert");
      MotionProfile profile = plan_->find(active_->id)->profile;
      if (cmd.args.contains("profile")) {
        try {
          profile = profile_from_json(cmd.args["profile"], "/args/profile");
        } catch (const Error& e) {
          return reject("bad_args", e.what());
        }
      }
      profile_ = profile;
      const auto& g = config_.geometry;
      setpoint_.d_ins = quantize_value(active_->d_ins, g.joint_resolution_linear);
      clear_tissue();
      reset_insertion_stats();
      seeds_placed_ = 0;
      if (const auto* idx = std::get_if<IndexedRotation>(&profile_.rotation)) next_index_at_ = idx->interval;
      transition(P::Inserting, "go_insert");
      return {};
    }

    case C::ReleaseHub:
      state_.hub = HubState::Open;
      transition(P::HubOpen, "release_hub");
      return {};

    case C::ClampHub:
      state_.hub = HubState::Clamped;
      if (phase == P::HubOpen) transition(P::AtDepth, "clamp_hub");
      return {};

    case C::ConfirmSeed: {
      const NeedleTask& task = *plan_->find(active_->id);
      const SeedSpec& seed = task.seeds.at(seeds_placed_);
      const TelemetryFrame f = frame();
      const Vec3 dir = needle_direction(f.pose);
      const Vec3 planned = f.tip - dir * seed.offset_from_tip;
      const double offset = seed_offset(state_.tissue);
      const Vec3 placed = planned - dir * offset;
      log_event("seed", json{{"needle", task.id},
                             {"index", seeds_placed_},
                             {"offset_from_tip", seed.offset_from_tip},
                             {"seed_offset", offset},
                             {"planned", detail::to_json(planned)},
                             {"placed", detail::to_json(placed)}});
      ++seeds_placed_;
      if (seeds_placed_ == task.seeds.size()) transition(P::SeedPlaced, "confirm_seed");
      return {};
    }

    case C::Retract:
      if (state_.hub != HubState::Clamped) return reject("hub_open", "hub must be clamped to retract");
      setpoint_.d_ins = 0.0;
      transition(P::Retracting, "retract");
      return {};

    case C::SetThreshold: {
      const double t = cmd.args["threshold"].get<double>();
      if (!(t > config_.tissue.F_punct)) {
        return reject("threshold_too_low", "release threshold must exceed the puncture force");
      }
      threshold_override_ = t;
      state_.engagement.release_threshold = t;
      return {};
    }

    case C::ApplyShift: {
      const Vec3 offset(cmd.args["dx"].get<double>(), cmd.args["dy"].get<double>(), cmd.args["dz"].get<double>());
      Plan shifted;
      std::optional<ResolvedNeedle> repositioned;
      try {
        shifted = apply_prostate_shift(*plan_, offset, config_.geometry);
        if (phase == P::Prepositioned) {
          repositioned = resolve_needle(*shifted.find(active_->id), shifted, config_.geometry);
        }
      } catch (const Error& e) {
        return reject(e.code(), e.what());
      }
      plan_ = std::move(shifted);
      log_event("shift", json{{"offset", detail::to_json(offset)}, {"total", detail::to_json(plan_->total_shift())}});
      if (repositioned) {
        begin_positioning(*repositioned);
        transition(P::Positioning, "apply_shift");
      }
      return {};
    }

    case C::EStop:
      setpoint_ = state_.joints;
      commanded_ = state_.joints;
      transition(P::EmergencyManual, "e_stop");
      return {};

    case C::ManualRetract: {
      const double mm = cmd.args["mm"].get<double>();
      if (mm < 0) return reject("bad_args", "mm must be >= 0");
      double next = 0.0;
      try {
        next = manual_retract(state_.engagement, phase == P::EmergencyManual, d_ins, mm);
      } catch (const Error& e) {
        return reject(e.code(), e.what());
      }
      state_.joints.d_ins = setpoint_.d_ins = commanded_.d_ins = next;
      tissue_force_ = 0.0;
      refresh_tissue_depth();
      log_event("manual_retract", json{{"mm", mm}, {"d_ins", next}});
      return {};
    }

    case C::Rehome: {
      try {
        state_.engagement = rehome(state_.engagement, d_ins);
      } catch (const Error& e) {
        return reject(e.code(), e.what());
      }
      state_.hub = HubState::Clamped;
      clear_tissue();
      log_event("rehome", json{{"engagement", to_string(state_.engagement.status)}});
      transition(plan_ ? P::PlanLoaded : P::Idle, "rehome");
      return {};
    }

    case C::Reset:
      if (d_ins > 0) return reject("NotAtHome", NotAtHome(d_ins).what());
      plan_.reset();
      status_.clear();
      active_.reset();
      config_ = base_;
      threshold_override_.reset();
      state_.current_needle.reset();
      state_.hub = HubState::Clamped;
      state_.engagement = EngagementState{};
      state_.engagement.release_threshold = config_.release_threshold;
      setpoint_ = commanded_ = state_.joints;
      clear_tissue();
      reset_insertion_stats();
      transition(P::Idle, "reset");
      return {};
  }
  return reject("illegal_in_phase", "unhandled command");
}

bool Controller::complete_if_done() {
  const bool pending = std::any_of(status_.begin(), status_.end(),
                                   [](const auto& kv) { return kv.second == NeedleStatus::Pending; });
  if (pending) return false;
  state_.current_needle.reset();
  transition(P::Complete, "next_needle");
  log_event("complete", json{{"needles", status_.size()}});
  return true;
}

void Controller::begin_positioning(const ResolvedNeedle& needle) {
  const auto& g = config_.geometry;
  active_ = needle;
  const JointState target = quantize(ik_position(needle.pose, g, state_.joints), g);
  setpoint_ = state_.joints;
  setpoint_.xf = target.xf;
  setpoint_.yf = target.yf;
  setpoint_.xr = target.xr;
  setpoint_.yr = target.yr;
  setpoint_.z_pre = quantize_value(g.guide_standoff, g.joint_resolution_linear);
  setpoint_.d_ins = 0.0;
  settle_count_ = 0;
}

void Controller::reset_insertion_stats() {
  peak_force_ = 0.0;
  force_sum_ = 0.0;
  force_samples_ = 0;
}

void Controller::clear_tissue() {
  state_.tissue = TissueState{};
  tissue_force_ = 0.0;
}

double Controller::tissue_depth_for(const JointState& joints) const {
  const auto& g = config_.geometry;
  const Vec3 dir = needle_direction(needle_pose(joints, g));
  return std::max(0.0, tip_advance(joints, g) - config_.tissue.tissue_plane_z / dir.z());
}

void Controller::refresh_tissue_depth() {
  state_.tissue.tip_depth = std::min(state_.tissue.tip_depth, tissue_depth_for(state_.joints));
  state_.tissue = with_force(state_.tissue, tissue_force_, config_.tissue);
}

double Controller::bone_force() const {
  if (!plan_ || plan_->obstacles.bone.empty()) return 0.0;
  const auto& g = config_.geometry;
  const NeedlePose pose = needle_pose(state_.joints, g);
  const Vec3 tip = tip_point(pose, state_.joints, g);
  const double dz = needle_direction(pose).z();
  double f = 0.0;
  for (const auto& b : plan_->obstacles.bone) {
    if (!b.x.contains(tip.x()) || !b.y.contains(tip.y()) || tip.z() <= b.surface_z) continue;
    f += bone_contact_force((tip.z() - b.surface_z) / dz, config_.tissue);
  }
  return f;
}

void Controller::tick_positioning() {
  const auto& g = config_.geometry;
  const double max_step = config_.controller.positioning_speed * config_.controller.tick_dt;
  const double res = g.joint_resolution_linear;
  bool settled = true;
  auto move = [&](double JointState::*axis) {
    commanded_.*axis = step_toward(commanded_.*axis, setpoint_.*axis, max_step);
    state_.joints.*axis = quantize_value(commanded_.*axis, res);
    settled = settled && std::abs(state_.joints.*axis - setpoint_.*axis) <= res * (1.0 + 1e-9);
  };
  move(&JointState::xf);
  move(&JointState::yf);
  move(&JointState::xr);
  move(&JointState::yr);
  move(&JointState::z_pre);
  settle_count_ = settled ? settle_count_ + 1 : 0;
  if (settle_count_ >= config_.controller.settle_ticks) transition(P::Prepositioned, "settled");
}

void Controller::tick_inserting() {
  const auto& g = config_.geometry;
  const auto& cs = config_.controller;
  const double v = profile_.insertion_speed;
  const double omega = profile_.omega();

  commanded_.d_ins = std::min(setpoint_.d_ins, commanded_.d_ins + v * cs.tick_dt);
  state_.joints.d_ins = quantize_value(commanded_.d_ins, g.joint_resolution_linear);

  if (const auto* idx = std::get_if<IndexedRotation>(&profile_.rotation)) {
    while (state_.joints.d_ins >= next_index_at_) {
      commanded_.theta += idx->step;
      next_index_at_ += idx->interval;
    }
  } else {
    commanded_.theta += omega * 360.0 * cs.tick_dt;
  }
  state_.joints.theta = quantize_value(commanded_.theta, g.joint_resolution_rotation);

  const double depth = tissue_depth_for(state_.joints);
  const double delta = std::max(0.0, depth - state_.tissue.tip_depth);
  StepResult sr = step(state_.tissue, delta, v, omega, config_.tissue);
  state_.tissue = sr.state;
  tissue_force_ = sr.force;
  for (const auto& p : sr.events) {
    log_event("puncture", json{{"needle", active_->id}, {"depth", p.depth}, {"peak_force", p.peak_force}});
  }

  const double total = tissue_force_ + bone_force();
  if (state_.tissue.tip_depth > 0.0 || total > 0.0) {
    peak_force_ = std::max(peak_force_, total);
    force_sum_ += total;
    ++force_samples_;
  }

  InterlockUpdate u = update(state_.engagement, total);
  state_.engagement = u.state;
  if (u.trip) {
    setpoint_.d_ins = commanded_.d_ins = state_.joints.d_ins;
    log_event("trip", json{{"needle", active_->id},
                           {"force", u.trip->force},
                           {"threshold", u.trip->threshold},
                           {"d_ins", state_.joints.d_ins}});
    transition(P::SafetyTripped, "trip");
    return;
  }
  if (state_.joints.d_ins == setpoint_.d_ins) transition(P::AtDepth, "setpoint reached");
}

void Controller::tick_retracting() {
  const auto& g = config_.geometry;
  const auto& cs = config_.controller;
  commanded_.d_ins = std::max(0.0, commanded_.d_ins - cs.retract_speed * cs.tick_dt);
  state_.joints.d_ins = quantize_value(commanded_.d_ins, g.joint_resolution_linear);
  if (cs.rotate_during_retract && profile_.omega() > 0) {
    commanded_.theta += profile_.omega() * 360.0 * cs.tick_dt;
    state_.joints.theta = quantize_value(commanded_.theta, g.joint_resolution_rotation);
  }
  tissue_force_ = 0.0;
  refresh_tissue_depth();
  if (state_.joints.d_ins == 0.0) {
    status_[active_->id] = NeedleStatus::Done;
    log_event("needle_done", json{{"needle", active_->id},
                                  {"peak_force", peak_force_},
                                  {"seeds", seeds_placed_}});
    clear_tissue();
    transition(P::NeedleDone, "retracted");
  }
}

TelemetryFrame Controller::tick() {
  ++state_.tick;
  state_.sim_time = static_cast<double>(state_.tick) * config_.controller.tick_dt;
  switch (state_.phase) {
    case P::Positioning: tick_positioning(); break;
    case P::Inserting: tick_inserting(); break;
    case P::Retracting: tick_retracting(); break;
    default: break;
  }
  return frame();
}

TelemetryFrame Controller::frame() const {
  const auto& g = config_.geometry;
  TelemetryFrame f;
  f.tick = state_.tick;
  f.sim_time = state_.sim_time;
  f.phase = state_.phase;
  f.needle = state_.current_needle;
  f.hub = state_.hub;
  f.joints = state_.joints;
  f.pose = needle_pose(state_.joints, g);
  f.inclination = inclination(f.pose.pitch, f.pose.yaw);
  f.tip = tip_point(f.pose, state_.joints, g);
  f.axial_force = tissue_force_ + bone_force();
  f.peak_force = peak_force_;
  f.mean_force = force_samples_ ? force_sum_ / static_cast<double>(force_samples_) : 0.0;
  f.prostate_displacement = state_.tissue.prostate_displacement;
  f.tissue_depth = state_.tissue.tip_depth;
  f.punctured = state_.tissue.punctured;
  f.engagement = state_.engagement;
  return f;
}

LogFile Controller::log_file() const {
  LogFile out;
  out.config = config_to_json(base_);
  out.events = log_.events();
  out.end = LogEnd{state_.tick, frame().digest()};
  return out;
}

}  // namespace brachy
