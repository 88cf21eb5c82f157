#include <doctest.h>

#include <random>

#include "brachy/errors.hpp"
#include "brachy/kinematics.hpp"
#include "oracles.hpp"

using namespace brachy;

TEST_CASE("inclination matches the dot-product oracle") {
  CHECK(inclination(0, 0) == doctest::Approx(0.0));
  CHECK(inclination(30, 0) == doctest::Approx(30.0).epsilon(1e-12));
  CHECK(inclination(0, -30) == doctest::Approx(30.0).epsilon(1e-12));
  CHECK(inclination(10, 10) == doctest::Approx(oracle::inclination(10, 10)).epsilon(1e-12));
  CHECK(inclination(10, 10) == doctest::Approx(14.00194).epsilon(1e-6));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> a(-60, 60);
  for (int i = 0; i < 1000; ++i) {
    const double p = a(rng), y = a(rng);
    CHECK(inclination(p, y) == doctest::Approx(oracle::inclination(p, y)).epsilon(1e-10));
  }
}

TEST_CASE("ik_position rejects angles at or beyond 90 degrees") {
  CHECK_THROWS_AS(ik_position({0, 0, 90, 0}, RobotGeometry{}), InclinationExceeded);
  CHECK_THROWS_AS(ik_position({0, 0, 0, -95}, RobotGeometry{}), InclinationExceeded);
}

TEST_CASE("ik_position examples") {
  const RobotGeometry g;
  const JointState j0 = ik_position({0, 0, 0, 0}, g);
  CHECK(j0.xf == 0.0);
  CHECK(j0.yf == 0.0);
  CHECK(j0.xr == 0.0);
  CHECK(j0.yr == 0.0);

  const JointState j = ik_position({10, 5, 10, 0}, g);
  const oracle::V3 entry(10, 5, 0);
  const oracle::V3 rear = oracle::line_plane(entry, oracle::direction(10, 0), -100.0);
  CHECK(j.xf == doctest::Approx(10.0));
  CHECK(j.yf == doctest::Approx(5.0));
  CHECK(j.xr == doctest::Approx(rear.x()).epsilon(1e-12));
  CHECK(j.yr == doctest::Approx(rear.y()).epsilon(1e-12));
  CHECK(j.yr == doctest::Approx(-12.633).epsilon(1e-4));

  CHECK_THROWS_AS(ik_position({52.5, 52.5, 31, 0}, g), InclinationExceeded);
}

TEST_CASE("ik_position leaves other axes untouched") {
  JointState cur;
  cur.z_pre = 12.5;
  cur.d_ins = 40;
  cur.theta = 90;
  const JointState j = ik_position({1, 2, 3, 4}, RobotGeometry{}, cur);
  CHECK(j.z_pre == 12.5);
  CHECK(j.d_ins == 40);
  CHECK(j.theta == 90);
}

TEST_CASE("TravelExceeded names every joint out of range") {
  RobotGeometry g;
  try {
    ik_position({60, 0, 0, -30}, g);
    FAIL("expected TravelExceeded");
  } catch (const TravelExceeded& e) {
    REQUIRE(e.joints().size() == 2);
    CHECK(e.joints()[0] == "xf");
    CHECK(e.joints()[1] == "xr");
  }
  // rear carriage alone: entry in range, steep yaw pushes xr out
  g.rear_travel = {-60, 60};
  g.max_inclination = 45;
  try {
    ik_position({50, 0, 0, -20}, g);
    FAIL("expected TravelExceeded");
  } catch (const TravelExceeded& e) {
    REQUIRE(e.joints().size() == 1);
    CHECK(e.joints()[0] == "xr");
  }
}

TEST_CASE("fk_position examples") {
  const RobotGeometry g;
  const NeedlePose p0 = fk_position({}, g);
  CHECK(p0 == NeedlePose{});

  JointState j;
  j.xf = 10;
  j.yf = 5;
  j.xr = 10;
  j.yr = -12.633;
  const NeedlePose p = fk_position(j, g);
  CHECK(p.entry_x == 10);
  CHECK(p.entry_y == 5);
  CHECK(p.pitch == doctest::Approx(10.0).epsilon(1e-4));
  CHECK(p.yaw == doctest::Approx(0.0));

  JointState k;
  k.xr = -57.735;
  const NeedlePose q = fk_position(k, g);
  CHECK(q.yaw == doctest::Approx(oracle::deg(std::atan(57.735 / 100.0))).epsilon(1e-12));
  CHECK(q.yaw == doctest::Approx(30.0).epsilon(1e-5));
  CHECK(q.pitch == 0.0);

  JointState bad;
  bad.xr = 200;
  CHECK_THROWS_AS(fk_position(bad, g), TravelExceeded);
}

TEST_CASE("round trip and line membership over random in-limit poses") {
  const RobotGeometry g;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> e(-52.5, 52.5), a(-30, 30);
  int checked = 0;
  while (checked < 2000) {
    const NeedlePose p{e(rng), e(rng), a(rng), a(rng)};
    if (inclination(p.pitch, p.yaw) > g.max_inclination) continue;
    const JointState j = ik_position(p, g);
    const NeedlePose r = fk_position(j, g);
    CHECK(std::abs(r.entry_x - p.entry_x) <= 1e-9);
    CHECK(std::abs(r.entry_y - p.entry_y) <= 1e-9);
    CHECK(std::abs(r.pitch - p.pitch) <= 1e-9);
    CHECK(std::abs(r.yaw - p.yaw) <= 1e-9);

    const oracle::V3 entry(p.entry_x, p.entry_y, 0);
    const oracle::V3 d = oracle::direction(p.pitch, p.yaw);
    CHECK(oracle::point_line_distance({j.xf, j.yf, 0}, entry, d) <= 1e-9);
    CHECK(oracle::point_line_distance({j.xr, j.yr, -g.baseline_L}, entry, d) <= 1e-9);
    ++checked;
  }
}

TEST_CASE("tip_point examples") {
  const RobotGeometry g;
  JointState j;
  j.z_pre = 20;
  CHECK(tip_point({}, j, g).isApprox(Vec3(0, 0, 0)));
  j.d_ins = 60;
  CHECK((tip_point({}, j, g) - Vec3(0, 0, 60)).norm() < 1e-12);

  const NeedlePose p{0, 0, 10, 0};
  const Vec3 tip = tip_point(p, j, g);
  const oracle::V3 expect = oracle::direction(10, 0) * 60.0;
  CHECK((tip - expect).norm() < 1e-12);
  CHECK(tip.y() == doctest::Approx(10.419).epsilon(1e-4));
  CHECK(tip.z() == doctest::Approx(59.088).epsilon(1e-4));
}

TEST_CASE("tip advance is strictly increasing in d_ins") {
  const RobotGeometry g;
  const NeedlePose p{5, -5, 12, -7};
  JointState j = ik_position(p, g);
  j.z_pre = 20;
  double prev = -1e9;
  for (double d = 0; d <= 150; d += 0.5) {
    j.d_ins = d;
    const double adv = tip_point(p, j, g).dot(needle_direction(p));
    CHECK(adv > prev);
    prev = adv;
  }
}

TEST_CASE("quantize examples and idempotence") {
  CHECK(quantize_value(10.0, 0.05) == doctest::Approx(10.0));
  CHECK(quantize_value(10.024, 0.05) == doctest::Approx(10.0));
  CHECK(quantize_value(10.026, 0.05) == doctest::Approx(10.05));

  const RobotGeometry g;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int i = 0; i < 500; ++i) {
    JointState j{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng) * 5};
    const JointState q = quantize(j, g);
    CHECK(quantize(q, g) == q);
    CHECK(q.xf == doctest::Approx(oracle::snap(j.xf, 0.05)));
    CHECK(q.theta == doctest::Approx(oracle::snap(j.theta, 1.0)));
    CHECK(std::abs(q.d_ins - j.d_ins) <= 0.025 + 1e-12);
  }
}

TEST_CASE("geometry validation") {
  RobotGeometry g;
  CHECK_NOTHROW(g.validate());
  g.rear_travel = {-100, 100};  // 52.5 + 57.7 > 100
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g = RobotGeometry{};
  g.max_inclination = 50;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g = RobotGeometry{};
  g.baseline_L = 0;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("precision study is reproducible and within bounds") {
  const RobotGeometry g;
  const PrecisionStudy a = monte_carlo_precision(g, 2000, 42);
  const PrecisionStudy b = monte_carlo_precision(g, 2000, 42);
  CHECK(a.samples == 2000);
  CHECK(a.max_error == b.max_error);
  CHECK(a.mean_error == b.mean_error);
  CHECK(a.max_error <= 1.0);
  CHECK(a.mean_error > 0.0);
  CHECK(a.mean_error <= a.rms_error);
  CHECK(a.rms_error <= a.max_error);
}

TEST_CASE("gauge names") {
  CHECK(to_string(NeedleGauge::G17) == "17G");
  CHECK(gauge_from_string("18G") == NeedleGauge::G18);
  CHECK_THROWS(gauge_from_string("20G"));
}
