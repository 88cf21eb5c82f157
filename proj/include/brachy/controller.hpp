#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "brachy/config.hpp"
#include "brachy/event_log.hpp"
#include "brachy/kinematics.hpp"
#include "brachy/plan.hpp"
#include "brachy/safety.hpp"
#include "brachy/tissue.hpp"
#include "brachy/workspace.hpp"

namespace brachy {

enum class Phase {
  Idle,
  PlanLoaded,
  Positioning,
  Prepositioned,
  Inserting,
  AtDepth,
  HubOpen,
  SeedPlaced,
  Retracting,
  NeedleDone,
  SafetyTripped,
  EmergencyManual,
  Complete,
};

enum class HubState { Clamped, Open };

enum class CommandKind {
  LoadPlan,
  SelectNeedle,
  GoPosition,
  GoInsert,
  ReleaseHub,
  ClampHub,
  ConfirmSeed,
  Retract,
  NextNeedle,
  SetThreshold,
  ApplyShift,
  EStop,
  ManualRetract,
  Rehome,
  Reset,
};

inline constexpr std::array kAllPhases{
    Phase::Idle,       Phase::PlanLoaded, Phase::Positioning, Phase::Prepositioned,   Phase::Inserting,
    Phase::AtDepth,    Phase::HubOpen,    Phase::SeedPlaced,  Phase::Retracting,      Phase::NeedleDone,
    Phase::SafetyTripped, Phase::EmergencyManual, Phase::Complete,
};

inline constexpr std::array kAllCommands{
    CommandKind::LoadPlan,     CommandKind::SelectNeedle, CommandKind::GoPosition, CommandKind::GoInsert,
    CommandKind::ReleaseHub,   CommandKind::ClampHub,     CommandKind::ConfirmSeed, CommandKind::Retract,
    CommandKind::NextNeedle,   CommandKind::SetThreshold, CommandKind::ApplyShift, CommandKind::EStop,
    CommandKind::ManualRetract, CommandKind::Rehome,      CommandKind::Reset,
};

std::string_view to_string(Phase p) noexcept;
std::string_view to_string(HubState h) noexcept;
std::string_view to_string(CommandKind c) noexcept;
std::optional<Phase> phase_from_string(std::string_view s) noexcept;
std::optional<CommandKind> command_from_string(std::string_view s) noexcept;

struct Command {
  CommandKind kind = CommandKind::EStop;
  nlohmann::json args = nlohmann::json::object();
  std::string client;  // recorded in the log; empty for local callers
};

// Throws ParseError when args do not have the documented shape.
void validate_command_args(CommandKind kind, const nlohmann::json& args);

// Parses {"cmd": name, "args": {...}}; throws ParseError.
Command command_from_json(const nlohmann::json& doc);

struct CommandResult {
  bool ok = true;
  std::string code;    // machine-readable rejection code, empty when ok
  std::string reason;  // human-readable, empty when ok
};

// The legal-transition table. A command is accepted iff it is legal in the
// current phase and its guard holds.
struct TransitionRule {
  Phase from;
  CommandKind command;
  std::string_view to;     // resulting phase(s), "|" separated
  std::string_view guard;  // empty when unconditional
};

const std::vector<TransitionRule>& transition_rules();
bool is_legal(Phase phase, CommandKind command) noexcept;
nlohmann::json transition_table_json();

struct ProcedureState {
  Phase phase = Phase::Idle;
  std::optional<std::string> current_needle;
  HubState hub = HubState::Clamped;
  JointState joints;
  TissueState tissue;
  EngagementState engagement;
  double sim_time = 0.0;
  std::uint64_t tick = 0;
};

struct TelemetryFrame {
  std::uint64_t tick = 0;
  double sim_time = 0.0;
  Phase phase = Phase::Idle;
  std::optional<std::string> needle;
  HubState hub = HubState::Clamped;
  JointState joints;
  NeedlePose pose;
  double inclination = 0.0;
  Vec3 tip = Vec3::Zero();
  double axial_force = 0.0;
  double peak_force = 0.0;  // since the start of the current insertion
  double mean_force = 0.0;  // over insertion ticks with the tip in tissue
  double prostate_displacement = 0.0;
  double tissue_depth = 0.0;
  bool punctured = false;
  EngagementState engagement;

  nlohmann::json to_json() const;
  std::string digest() const;  // fnv1a of the compact JSON form
};

enum class NeedleStatus { Pending, Done };

// Fixed-step procedure simulator and workflow state machine. Single owner:
// commands are applied between ticks by whoever owns the instance.
class Controller {
 public:
  explicit Controller(Config base = {});

  CommandResult handle(const Command& cmd);
  TelemetryFrame tick();
  TelemetryFrame frame() const;

  const ProcedureState& state() const noexcept { return state_; }
  Phase phase() const noexcept { return state_.phase; }
  std::uint64_t ticks() const noexcept { return state_.tick; }
  const Config& base_config() const noexcept { return base_; }
  const Config& config() const noexcept { return config_; }
  const std::optional<Plan>& plan() const noexcept { return plan_; }
  const std::optional<ResolvedNeedle>& active_needle() const noexcept { return active_; }
  const std::map<std::string, NeedleStatus>& needle_status() const noexcept { return status_; }
  const EventLog& log() const noexcept { return log_; }

  // Header + events + end record carrying the current tick and frame digest.
  LogFile log_file() const;

 private:
  CommandResult apply(const Command& cmd);
  CommandResult reject(std::string code, std::string reason) const;
  void transition(Phase to, std::string_view cause);
  void log_event(std::string kind, nlohmann::json payload);
  void begin_positioning(const ResolvedNeedle& needle);
  void reset_insertion_stats();
  void clear_tissue();
  double bone_force() const;
  void refresh_tissue_depth();
  double tissue_depth_for(const JointState& joints) const;
  bool complete_if_done();

  void tick_positioning();
  void tick_inserting();
  void tick_retracting();

  Config base_;
  Config config_;
  std::optional<double> threshold_override_;
  std::optional<Plan> plan_;
  std::map<std::string, NeedleStatus> status_;
  std::optional<ResolvedNeedle> active_;
  MotionProfile profile_;

  ProcedureState state_;
  JointState setpoint_;
  JointState commanded_;  // continuous motor positions before quantization
  int settle_count_ = 0;
  std::size_t seeds_placed_ = 0;
  double next_index_at_ = 0.0;

  double tissue_force_ = 0.0;
  double peak_force_ = 0.0;
  double force_sum_ = 0.0;
  std::uint64_t force_samples_ = 0;

  EventLog log_;
  bool deferring_ = false;
  std::vector<std::pair<std::string, nlohmann::json>> deferred_;
};

}  // namespace brachy
