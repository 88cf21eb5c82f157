#include "brachy/run.hpp"

#include "brachy/errors.hpp"
#include "brachy/plan_io.hpp"

namespace brachy {

using nlohmann::json;

namespace {

class Driver {
 public:
  Driver(const Config& base, const RunOptions& opt) : c_(base), opt_(opt) {}

  Controller& controller() { return c_; }

  void issue(const std::string& needle, CommandKind kind, json args = json::object()) {
    const CommandResult r = c_.handle(Command{kind, std::move(args), "run"});
    if (!r.ok) throw RunFailure(needle, "rejected", std::string(to_string(kind)) + ": " + r.reason);
  }

  void run_while(const std::string& needle, Phase phase) {
    std::uint64_t n = 0;
    while (c_.phase() == phase) {
      if (++n > opt_.max_ticks_per_phase) {
        throw RunFailure(needle, "timeout", std::string(to_string(phase)) + " did not finish");
      }
      c_.tick();
    }
  }

  void expect(const std::string& needle, Phase phase) {
    if (c_.phase() == phase) return;
    if (c_.phase() == Phase::SafetyTripped) {
      throw RunFailure(needle, "trip",
                       "release tripped at " + std::to_string(c_.state().engagement.trip_force) + " N");
    }
    throw RunFailure(needle, "phase",
                     "expected " + std::string(to_string(phase)) + ", found " + std::string(to_string(c_.phase())));
  }

 private:
  Controller c_;
  const RunOptions& opt_;
};

}  // namespace

RunResult run_plan(const Plan& plan, const Config& base, const RunOptions& options) {
  Driver d(base, options);
  Controller& c = d.controller();
  if (options.threshold) d.issue("", CommandKind::SetThreshold, json{{"threshold", *options.threshold}});
  d.issue("", CommandKind::LoadPlan, json{{"plan", plan_to_json(plan)}});

  RunResult out;
  for (const auto& task : c.plan()->needles) {
    const std::string& id = task.id;
    d.issue(id, CommandKind::SelectNeedle, json{{"id", id}});
    d.issue(id, CommandKind::GoPosition);
    d.run_while(id, Phase::Positioning);
    d.expect(id, Phase::Prepositioned);

    json insert = json::object();
    if (options.profile) insert["profile"] = profile_to_json(*options.profile);
    d.issue(id, CommandKind::GoInsert, insert);
    d.run_while(id, Phase::Inserting);
    d.expect(id, Phase::AtDepth);

    NeedleSummary s;
    s.id = id;
    const TelemetryFrame at_depth = c.frame();
    s.peak_force = at_depth.peak_force;
    s.mean_force = at_depth.mean_force;

    d.issue(id, CommandKind::ReleaseHub);
    const std::size_t before = c.log().size();
    for (std::size_t i = 0; i < task.seeds.size(); ++i) d.issue(id, CommandKind::ConfirmSeed);
    for (std::size_t i = before; i < c.log().size(); ++i) {
      const auto& e = c.log().events()[i];
      if (e.kind == "seed") s.seed_offsets.push_back(e.payload.at("seed_offset").get<double>());
    }
    d.issue(id, CommandKind::ClampHub);
    d.issue(id, CommandKind::Retract);
    d.run_while(id, Phase::Retracting);
    d.expect(id, Phase::NeedleDone);
    out.needles.push_back(std::move(s));
  }
  if (c.phase() != Phase::Complete) d.issue("", CommandKind::NextNeedle);
  d.expect("", Phase::Complete);

  out.log = c.log_file();
  out.final_frame = c.frame();
  out.digest = out.final_frame.digest();
  return out;
}

ReplayResult replay(std::string_view log_text) { return replay(read_log(log_text)); }

ReplayResult replay(const LogFile& log) {
  Config cfg;
  apply_config_json(cfg, log.config);
  Controller c(cfg);

  for (const auto& e : log.events) {
    if (e.kind != "command") continue;
    const std::string name = e.payload.at("cmd").get<std::string>();
    const auto kind = command_from_string(name);
    if (!kind) throw ParseError("event " + std::to_string(e.seq), "unknown command '" + name + "'");
    while (c.ticks() < e.tick) c.tick();
    Command cmd{*kind, e.payload.value("args", json::object()), e.payload.value("client", std::string())};
    c.handle(cmd);
  }
  const std::uint64_t end_tick = log.end ? log.end->tick : 0;
  while (c.ticks() < end_tick) c.tick();

  const std::string digest = c.frame().digest();
  const auto& regenerated = c.log().events();
  const std::size_t n = std::min(regenerated.size(), log.events.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!(regenerated[i] == log.events[i])) {
      throw DigestMismatch(log.end ? log.end->digest : "", digest + " (event " + std::to_string(i + 1) + " diverged)");
    }
  }
  if (regenerated.size() != log.events.size()) {
    throw DigestMismatch(log.end ? log.end->digest : "",
                         digest + " (" + std::to_string(regenerated.size()) + " events regenerated, " +
                             std::to_string(log.events.size()) + " logged)");
  }
  if (log.end && log.end->digest != digest) throw DigestMismatch(log.end->digest, digest);
  return ReplayResult{digest, c.ticks(), regenerated.size()};
}

}  // namespace brachy
