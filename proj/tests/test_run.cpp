#include <doctest.h>

#include <algorithm>

#include "brachy/errors.hpp"
#include "brachy/plan_io.hpp"
#include "brachy/run.hpp"
#include "oracles.hpp"

using namespace brachy;

namespace {

Plan demo(const char* name) {
  return load_plan_file(std::string(BRACHY_SOURCE_DIR) + "/plans/" + name);
}

}  // namespace

TEST_CASE("same plan, same bytes") {
  const Plan p = demo("demo_3needle.json");
  const RunResult a = run_plan(p);
  const RunResult b = run_plan(p);
  CHECK(a.log_text() == b.log_text());
  CHECK(a.digest == b.digest);
  CHECK(a.final_frame.phase == Phase::Complete);
}

TEST_CASE("replay reproduces the digest") {
  const RunResult r = run_plan(demo("demo_3needle.json"));
  const ReplayResult rp = replay(r.log_text());
  CHECK(rp.digest == r.digest);
  CHECK(rp.ticks == r.final_frame.tick);
  CHECK(rp.events == r.log.events.size());
}

TEST_CASE("three needles complete in order") {
  const RunResult r = run_plan(demo("demo_3needle.json"));
  std::vector<std::string> ids;
  double last_t = -1.0;
  for (const auto& e : r.log.events) {
    if (e.kind != "needle_done") continue;
    ids.push_back(e.payload.at("needle").get<std::string>());
    CHECK(e.sim_time > last_t);
    last_t = e.sim_time;
  }
  CHECK(ids == std::vector<std::string>{"N1", "N2", "N3"});
  REQUIRE(r.needles.size() == 3);
  CHECK(r.needles[0].seed_offsets.size() == 2);
  CHECK(r.needles[2].seed_offsets.size() == 3);
  for (const auto& n : r.needles) {
    CHECK(n.peak_force > 0.0);
    CHECK(n.mean_force > 0.0);
    CHECK(n.mean_force <= n.peak_force);
  }
  CHECK(r.log.events.back().kind == "complete");
}

TEST_CASE("empty log replays to idle") {
  const ReplayResult r = replay(std::string_view{});
  CHECK(r.ticks == 0);
  CHECK(r.events == 0);
  CHECK(r.digest == Controller{}.frame().digest());
}

TEST_CASE("tampered logs are detected") {
  const RunResult r = run_plan(demo("demo_1needle.json"));
  LogFile bad = r.log;
  bad.end->digest = "0000000000000000";
  CHECK_THROWS_AS(replay(bad), DigestMismatch);

  LogFile late = r.log;
  late.end->tick += 1;
  CHECK_THROWS_AS(replay(late), DigestMismatch);  // tick is part of the frame

  LogFile edited = r.log;
  for (auto& e : edited.events) {
    if (e.kind == "needle_done") e.payload["peak_force"] = 1.0;
  }
  CHECK_THROWS_AS(replay(edited), DigestMismatch);

  LogFile shifted = r.log;
  for (auto& e : shifted.events) {
    if (e.kind == "command" && e.payload.at("cmd") == "go_insert") ++e.tick;
  }
  CHECK_THROWS_AS(replay(shifted), DigestMismatch);

  const std::string text = r.log_text();
  const auto cut = text.rfind("{\"end\"");
  CHECK_THROWS_AS(replay(text.substr(0, cut)), TruncatedLog);
}

TEST_CASE("profile override and threshold option") {
  Plan p = demo("demo_1needle.json");
  RunOptions opt;
  opt.profile = MotionProfile{10.0, ContinuousRotation{10.0}};
  opt.threshold = 12.0;
  const RunResult r = run_plan(p, {}, opt);
  CHECK(r.final_frame.engagement.release_threshold == 12.0);
  CHECK(r.needles[0].peak_force == doctest::Approx(5.0 * 0.75 * 0.85).epsilon(1e-3));
  CHECK(replay(r.log_text()).digest == r.digest);
}

TEST_CASE("a trip aborts the run") {
  Plan p = demo("demo_1needle.json");
  p.obstacles.bone.push_back(BoneObstacle{30.0, {-5, 5}, {-5, 5}});
  try {
    run_plan(p);
    FAIL("expected RunFailure");
  } catch (const RunFailure& e) {
    CHECK(e.cause() == "trip");
    CHECK(e.needle_id() == "N1");
  }
}

TEST_CASE("tick budget") {
  RunOptions opt;
  opt.max_ticks_per_phase = 100;
  try {
    run_plan(demo("demo_1needle.json"), {}, opt);
    FAIL("expected RunFailure");
  } catch (const RunFailure& e) {
    CHECK(e.cause() == "timeout");
  }
}
