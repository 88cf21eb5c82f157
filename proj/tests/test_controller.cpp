#include <doctest.h>

#include <algorithm>
#include <set>

#include "brachy/controller.hpp"
#include "brachy/errors.hpp"
#include "oracles.hpp"
#include "scenarios.hpp"

using namespace brachy;

using namespace scenario;

namespace {

json load_table() {
  return json::parse(oracle::slurp(std::string(BRACHY_SOURCE_DIR) + "/docs/transition_table.json"));
}

}  // namespace

TEST_CASE("documented table matches the implementation") {
  CHECK(load_table() == transition_table_json());
}

TEST_CASE("every phase and command pair conforms to the table") {
  const Conformance r = check_table(load_table());
  CHECK(r.pairs == 13 * 15);
  CHECK_MESSAGE(r.violations == 0, r.first);
}

TEST_CASE("legal commands in canonical states are accepted") {
  // The guard-free paths: every legal command succeeds from the driven state
  // except the ones whose guard is deliberately unmet there.
  const std::set<std::pair<Phase, CommandKind>> guarded{
      {Phase::SafetyTripped, CommandKind::Rehome},  // needle still in
      {Phase::SeedPlaced, CommandKind::Retract},    // hub still open
  };
  for (const auto& rule : transition_rules()) {
    CAPTURE(to_string(rule.from));
    CAPTURE(to_string(rule.command));
    Controller c;
    drive_to(c, rule.from);
    const CommandResult r = cmd(c, rule.command, args_for(c, rule.command));
    if (guarded.count({rule.from, rule.command})) {
      CHECK_FALSE(r.ok);
    } else {
      CHECK_MESSAGE(r.ok, r.code << ": " << r.reason);
    }
  }
}

TEST_CASE("e_stop is accepted in every phase and freezes motion") {
  for (Phase p : kAllPhases) {
    CAPTURE(to_string(p));
    Controller c;
    drive_to(c, p);
    const CommandResult r = cmd(c, CommandKind::EStop);
    CHECK(r.ok);
    CHECK(c.phase() == Phase::EmergencyManual);
    const JointState frozen = c.state().joints;
    for (int i = 0; i < 500; ++i) c.tick();
    CHECK(c.state().joints == frozen);
  }
}

TEST_CASE("release_hub during insertion is refused") {
  Controller c;
  drive_to(c, Phase::Inserting);
  const double d = c.state().joints.d_ins;
  const CommandResult r = cmd(c, CommandKind::ReleaseHub);
  CHECK_FALSE(r.ok);
  CHECK(r.code == "hub_locked");
  CHECK(r.reason == "hub locked during insertion");
  CHECK(c.phase() == Phase::Inserting);
  CHECK(c.state().hub == HubState::Clamped);
  const auto& e = c.log().events().back();
  CHECK(e.kind == "command");
  CHECK(e.payload.at("reason") == "hub locked during insertion");
  c.tick();
  CHECK(c.state().joints.d_ins >= d);
}

TEST_CASE("commanded insertion advances v*dt per tick") {
  json plan{{"version", 1}, {"needles", {needle("N1", 6, 30, 1.0)}}};
  Controller c;
  REQUIRE(cmd(c, CommandKind::LoadPlan, {{"plan", plan}}).ok);
  REQUIRE(cmd(c, CommandKind::SelectNeedle, {{"id", "N1"}}).ok);
  REQUIRE(cmd(c, CommandKind::GoPosition).ok);
  run_while(c, Phase::Positioning);
  REQUIRE(cmd(c, CommandKind::GoInsert).ok);
  const double res = c.config().geometry.joint_resolution_linear;
  for (int k = 1; k <= 3000; ++k) {
    c.tick();
    // within one half step of the continuous command; exact on whole steps
    CHECK(std::abs(c.state().joints.d_ins - 0.001 * k) <= res / 2 + 1e-9);
    if (k % 50 == 0) CHECK(c.state().joints.d_ins == doctest::Approx(oracle::snap(0.001 * k, res)).epsilon(1e-12));
  }
  CHECK(c.state().joints.d_ins == doctest::Approx(3.0));
  run_while(c, Phase::Inserting);
  CHECK(c.phase() == Phase::AtDepth);
  CHECK(c.state().joints.d_ins == doctest::Approx(30.0));
}

TEST_CASE("bone contact trips the release and the needle never advances after") {
  Controller c;
  drive_to(c, Phase::SafetyTripped);
  const auto& trips = c.log().events();
  const auto trip = std::find_if(trips.begin(), trips.end(), [](const auto& e) { return e.kind == "trip"; });
  REQUIRE(trip != trips.end());
  CHECK(trip->payload.at("force").get<double>() > trip->payload.at("threshold").get<double>());
  CHECK(c.state().engagement.tripped());

  const double d = c.state().joints.d_ins;
  const Vec3 tip = c.frame().tip;
  for (int i = 0; i < 2000; ++i) {
    c.tick();
    CHECK(c.state().joints.d_ins == d);
  }
  CHECK((c.frame().tip - tip).norm() == 0.0);

  CHECK_FALSE(cmd(c, CommandKind::GoInsert).ok);
  CHECK(cmd(c, CommandKind::Rehome).code == "NotAtHome");
  CHECK(cmd(c, CommandKind::ManualRetract, {{"mm", 5.0}}).ok);
  CHECK(c.state().joints.d_ins == doctest::Approx(std::max(0.0, d - 5.0)));
  CHECK(cmd(c, CommandKind::ManualRetract, {{"mm", 500.0}}).ok);
  CHECK(c.state().joints.d_ins == 0.0);
  CHECK(cmd(c, CommandKind::Rehome).ok);
  CHECK(c.phase() == Phase::PlanLoaded);
  CHECK_FALSE(c.state().engagement.tripped());
  CHECK(c.needle_status().at("N1") == NeedleStatus::Pending);
}

TEST_CASE("phase invariants hold on every frame of a procedure") {
  Controller c;
  REQUIRE(cmd(c, CommandKind::LoadPlan, {{"plan", two_needles()}}).ok);
  std::vector<TelemetryFrame> frames;
  auto run = [&](Phase p) {
    while (c.phase() == p) frames.push_back(c.tick());
  };
  for (const char* id : {"N1", "N2"}) {
    REQUIRE(cmd(c, CommandKind::SelectNeedle, {{"id", id}}).ok);
    REQUIRE(cmd(c, CommandKind::GoPosition).ok);
    run(Phase::Positioning);
    REQUIRE(cmd(c, CommandKind::GoInsert).ok);
    run(Phase::Inserting);
    REQUIRE(cmd(c, CommandKind::ReleaseHub).ok);
    frames.push_back(c.tick());
    REQUIRE(cmd(c, CommandKind::ConfirmSeed).ok);
    frames.push_back(c.tick());
    REQUIRE(cmd(c, CommandKind::ClampHub).ok);
    REQUIRE(cmd(c, CommandKind::Retract).ok);
    run(Phase::Retracting);
  }
  REQUIRE(cmd(c, CommandKind::NextNeedle).ok);
  CHECK(c.phase() == Phase::Complete);

  double prev_d = 0.0;
  Phase prev_phase = Phase::PlanLoaded;
  for (const auto& f : frames) {
    if (f.hub == HubState::Open) CHECK((f.phase == Phase::HubOpen || f.phase == Phase::SeedPlaced));
    if (f.phase == Phase::Positioning || f.phase == Phase::Prepositioned || f.phase == Phase::PlanLoaded) {
      CHECK(f.joints.d_ins == 0.0);
    }
    if (f.joints.d_ins > prev_d) CHECK((f.phase == Phase::Inserting || f.phase == Phase::AtDepth));
    if (f.joints.d_ins < prev_d) CHECK((f.phase == Phase::Retracting || f.phase == Phase::NeedleDone));
    CHECK(f.axial_force <= f.engagement.release_threshold);
    CHECK(f.inclination <= c.config().geometry.max_inclination);
    prev_d = f.joints.d_ins;
    prev_phase = f.phase;
  }
  (void)prev_phase;

  int done = 0;
  for (const auto& e : c.log().events()) done += e.kind == "needle_done";
  CHECK(done == 2);
}

TEST_CASE("identical command sequences give identical frames") {
  auto go = [] {
    Controller c;
    std::vector<std::string> digests;
    cmd(c, CommandKind::LoadPlan, {{"plan", two_needles()}});
    cmd(c, CommandKind::SelectNeedle, {{"id", "N2"}});
    cmd(c, CommandKind::GoPosition);
    for (int i = 0; i < 8000; ++i) {
      digests.push_back(c.tick().digest());
      if (c.phase() == Phase::Prepositioned) cmd(c, CommandKind::GoInsert);
    }
    return digests;
  };
  CHECK(go() == go());
}

TEST_CASE("empty plan completes immediately") {
  Controller c;
  REQUIRE(cmd(c, CommandKind::LoadPlan, {{"plan", {{"version", 1}, {"needles", json::array()}}}}).ok);
  CHECK(c.phase() == Phase::Complete);
  std::vector<std::string> kinds;
  for (const auto& e : c.log().events()) kinds.push_back(e.kind);
  CHECK(kinds == std::vector<std::string>{"command", "transition", "complete"});
}

TEST_CASE("shift while prepositioned repositions to the shifted entry") {
  Controller c;
  drive_to(c, Phase::Prepositioned);
  const JointState before = c.state().joints;
  REQUIRE(cmd(c, CommandKind::ApplyShift, {{"dx", 1.0}, {"dy", -0.5}, {"dz", 0.0}}).ok);
  CHECK(c.phase() == Phase::Positioning);
  run_while(c, Phase::Positioning);
  CHECK(c.phase() == Phase::Prepositioned);
  CHECK(c.state().joints.xf == doctest::Approx(before.xf + 1.0));
  CHECK(c.state().joints.yf == doctest::Approx(before.yf - 0.5));
  CHECK(c.plan()->total_shift().isApprox(Vec3(1.0, -0.5, 0.0)));

  // out-of-travel shift leaves the plan alone
  const CommandResult r = cmd(c, CommandKind::ApplyShift, {{"dx", 80.0}, {"dy", 0.0}, {"dz", 0.0}});
  CHECK_FALSE(r.ok);
  CHECK(r.code == "TravelExceeded");
  CHECK(c.plan()->total_shift().isApprox(Vec3(1.0, -0.5, 0.0)));
}

TEST_CASE("command guards") {
  Controller c;
  CHECK(cmd(c, CommandKind::SetThreshold, {{"threshold", 4.0}}).code == "threshold_too_low");
  CHECK(cmd(c, CommandKind::LoadPlan, {{"plan", {{"version", 2}, {"needles", json::array()}}}}).code ==
        "invalid_plan");
  CHECK(cmd(c, CommandKind::LoadPlan, {{"nope", 1}}).code == "bad_args");
  REQUIRE(cmd(c, CommandKind::LoadPlan, {{"plan", two_needles()}}).ok);
  CHECK(cmd(c, CommandKind::GoPosition).code == "no_needle_selected");
  CHECK(cmd(c, CommandKind::SelectNeedle, {{"id", "X"}}).code == "unknown_needle");
  REQUIRE(cmd(c, CommandKind::SetThreshold, {{"threshold", 9.5}}).ok);
  CHECK(c.state().engagement.release_threshold == 9.5);

  Controller m;
  drive_to(m, Phase::Inserting);
  REQUIRE(cmd(m, CommandKind::EStop).ok);
  CHECK(cmd(m, CommandKind::Reset).code == "NotAtHome");
  REQUIRE(cmd(m, CommandKind::ManualRetract, {{"mm", 1000.0}}).ok);
  REQUIRE(cmd(m, CommandKind::Reset).ok);
  CHECK(m.phase() == Phase::Idle);
  CHECK_FALSE(m.plan().has_value());

  CHECK_THROWS_AS(command_from_json(json{{"cmd", "launch"}}), ParseError);
  CHECK_THROWS_AS(command_from_json(json{{"cmd", "set_threshold"}, {"args", {{"threshold", "x"}}}}), ParseError);
  CHECK(command_from_json(json{{"cmd", "e_stop"}}).kind == CommandKind::EStop);
}

TEST_CASE("seed events carry planned and placed positions") {
  json plan{{"version", 1}, {"needles", {needle("N1", 6, 40, 5.0, 3)}}};
  Controller c;
  REQUIRE(cmd(c, CommandKind::LoadPlan, {{"plan", plan}}).ok);
  REQUIRE(cmd(c, CommandKind::SelectNeedle, {{"id", "N1"}}).ok);
  REQUIRE(cmd(c, CommandKind::GoPosition).ok);
  run_while(c, Phase::Positioning);
  REQUIRE(cmd(c, CommandKind::GoInsert).ok);
  run_while(c, Phase::Inserting);
  REQUIRE(cmd(c, CommandKind::ReleaseHub).ok);
  for (int i = 0; i < 3; ++i) {
    CHECK(c.phase() == Phase::HubOpen);
    REQUIRE(cmd(c, CommandKind::ConfirmSeed).ok);
  }
  CHECK(c.phase() == Phase::SeedPlaced);
  CHECK(cmd(c, CommandKind::Retract).code == "hub_open");
  int n = 0;
  for (const auto& e : c.log().events()) {
    if (e.kind != "seed") continue;
    const auto& p = e.payload;
    CHECK(p.at("index") == n);
    CHECK(p.at("planned")[2].get<double>() == doctest::Approx(40.0 - 2.0 * n));
    CHECK(p.at("placed")[2].get<double>() ==
          doctest::Approx(40.0 - 2.0 * n - p.at("seed_offset").get<double>()));
    ++n;
  }
  CHECK(n == 3);
}

TEST_CASE("names round trip") {
  for (Phase p : kAllPhases) CHECK(phase_from_string(to_string(p)) == p);
  for (CommandKind k : kAllCommands) CHECK(command_from_string(to_string(k)) == k);
  CHECK_FALSE(phase_from_string("LIMBO").has_value());
}
