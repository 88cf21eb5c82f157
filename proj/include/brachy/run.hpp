#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "brachy/config.hpp"
#include "brachy/controller.hpp"
#include "brachy/event_log.hpp"
#include "brachy/plan.hpp"

namespace brachy {

struct RunOptions {
  std::optional<MotionProfile> profile;  // replaces every needle's own profile
  std::optional<double> threshold;       // issued as set_threshold before loading
  std::uint64_t max_ticks_per_phase = 10'000'000;
};

struct NeedleSummary {
  std::string id;
  double peak_force = 0.0;
  double mean_force = 0.0;
  std::vector<double> seed_offsets;
};

struct RunResult {
  LogFile log;
  std::string digest;
  TelemetryFrame final_frame;
  std::vector<NeedleSummary> needles;

  std::string log_text() const { return write_log(log); }
};

// Headless driver: loads the plan and walks every needle through the
// standard workflow. Throws RunFailure when a command is rejected, a trip
// occurs, or a phase does not finish within the tick budget.
RunResult run_plan(const Plan& plan, const Config& base = {}, const RunOptions& options = {});

struct ReplayResult {
  std::string digest;
  std::uint64_t ticks = 0;
  std::size_t events = 0;
};

// Re-executes the logged commands at their ticks on a fresh controller built
// from the header config. Empty input replays to the idle state.
//   TruncatedLog / ParseError  malformed log
//   DigestMismatch             regenerated events or final state differ
ReplayResult replay(std::string_view log_text);
ReplayResult replay(const LogFile& log);

}  // namespace brachy
