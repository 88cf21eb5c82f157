#include <doctest.h>

#include <cmath>
#include <random>

#include "brachy/tissue.hpp"

using namespace brachy;

namespace {

struct Peak {
  double depth = 0.0;
  double force = 0.0;
};

// Fine-step insertion; returns the first puncture.
Peak fine_peak(double v, double omega, const TissueParams& p = {}, double dd = 0.001) {
  TissueState s;
  for (int i = 0; i < 20'000'000; ++i) {
    StepResult r = step(s, dd, v, omega, p);
    s = r.state;
    if (!r.events.empty()) return {r.events[0].depth, r.events[0].peak_force};
  }
  return {};
}

}  // namespace

TEST_CASE("rotation factor") {
  const TissueParams p;
  CHECK(rotation_factor(0, p) == 1.0);
  CHECK(rotation_factor(10, p) == doctest::Approx(0.75));
  CHECK(rotation_factor(5, p) == doctest::Approx(0.875));
  CHECK(rotation_factor(15, p) == doctest::Approx(0.75));
  CHECK_THROWS(rotation_factor(-1, p));
  double prev = 2;
  for (double w = 0; w <= 15; w += 0.25) {
    CHECK(rotation_factor(w, p) <= prev);
    prev = rotation_factor(w, p);
  }
}

TEST_CASE("velocity factor") {
  const TissueParams p;
  CHECK(velocity_factor(1, p) == 1.0);
  CHECK(velocity_factor(0.5, p) == 1.0);
  CHECK(velocity_factor(5, p) == doctest::Approx(0.85));
  CHECK(velocity_factor(10, p) == doctest::Approx(0.85));
  CHECK(velocity_factor(std::sqrt(5.0), p) == doctest::Approx(0.925));
  CHECK_THROWS(velocity_factor(0, p));
}

TEST_CASE("axial force examples") {
  const TissueParams p;
  CHECK(axial_force(TissueState{}, 3, 7, p) == 0.0);
  TissueState s;
  s.tip_depth = 30;
  s.punctured = true;
  s.puncture_depth = 5;
  CHECK(axial_force(s, 1, 0, p) == doctest::Approx(1.0 + 0.03 * 25));
  CHECK(axial_force(s, 1, 10, p) == doctest::Approx(1.3125));
}

TEST_CASE("puncture peaks at fine steps") {
  const Peak stat = fine_peak(1, 0);
  CHECK(std::abs(stat.depth - 5.0) <= 0.001);
  CHECK(stat.force == doctest::Approx(5.0).epsilon(1e-3));
  CHECK(fine_peak(1, 10).force == doctest::Approx(3.75).epsilon(1e-3));
  CHECK(fine_peak(5, 0).force == doctest::Approx(4.25).epsilon(1e-3));
  CHECK(fine_peak(5, 10).force / stat.force == doctest::Approx(0.6375).epsilon(1e-9));
}

TEST_CASE("peak ratios are exact for any parameter set") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  for (int i = 0; i < 25; ++i) {
    TissueParams p;
    p.k_load = u(rng);
    p.F_punct = 2 + u(rng);
    p.F_cut = 0.2 * u(rng);
    const double dd = 0.01;
    const double base = fine_peak(p.v_lo, 0, p, dd).force;
    CHECK(fine_peak(p.v_lo, p.omega_ref, p, dd).force / base == doctest::Approx(1 - p.rot_reduction).epsilon(1e-12));
    CHECK(fine_peak(p.v_hi, 0, p, dd).force / base == doctest::Approx(1 - p.vel_reduction).epsilon(1e-12));
  }
}

TEST_CASE("force drops at puncture and displacement follows force") {
  const TissueParams p;
  TissueState s;
  double before = 0;
  bool seen = false;
  for (int i = 0; i < 10000; ++i) {
    StepResult r = step(s, 0.01, 1, 0, p);
    CHECK(r.state.prostate_displacement == doctest::Approx(r.force / p.k_prostate));
    CHECK(r.state.prostate_displacement >= 0);
    if (s.punctured && !seen) {
      CHECK(r.force < before);
      CHECK(r.force == doctest::Approx(p.F_cut + p.mu_fric * 0.01));
      seen = true;
    }
    before = r.force;
    s = r.state;
  }
  CHECK(seen);
  CHECK(s.puncture_depth <= s.tip_depth);
  const TissueState relaxed = with_force(s, 0, p);
  CHECK(relaxed.prostate_displacement == 0.0);
}

TEST_CASE("sub-steps without puncture are path independent") {
  const TissueParams p;
  TissueState s;
  s.tip_depth = 10;
  s.punctured = true;
  s.puncture_depth = 5;
  const StepResult one = step(s, 4.0, 2, 3, p);
  TissueState t = s;
  double f = 0;
  for (int i = 0; i < 400; ++i) {
    const StepResult r = step(t, 0.01, 2, 3, p);
    t = r.state;
    f = r.force;
  }
  CHECK(t.tip_depth == doctest::Approx(one.state.tip_depth));
  CHECK(f == doctest::Approx(one.force));
  CHECK(t.punctured == one.state.punctured);

  TissueState pre;
  const StepResult a = step(pre, 3.0, 1, 0, p);
  TissueState b = pre;
  for (int i = 0; i < 300; ++i) b = step(b, 0.01, 1, 0, p).state;
  CHECK(b.tip_depth == doctest::Approx(a.state.tip_depth));
  CHECK(b.last_force == doctest::Approx(a.force));
}

TEST_CASE("bone contact and seed offset") {
  const TissueParams p;
  CHECK(bone_contact_force(0, p) == 0.0);
  CHECK(bone_contact_force(0.5, p) == doctest::Approx(5.0));
  CHECK(bone_contact_force(1.0, p) == doctest::Approx(10.0));
  CHECK_THROWS(bone_contact_force(-0.1, p));

  CHECK(seed_offset(TissueState{}) == 0.0);
  CHECK(seed_offset(with_force(TissueState{}, 1.75, p)) == doctest::Approx(1.75));
  CHECK(seed_offset(with_force(TissueState{}, 5.0, p)) == doctest::Approx(5.0));
}

TEST_CASE("negative advance is rejected") {
  CHECK_THROWS(step(TissueState{}, -0.1, 1, 0, TissueParams{}));
}

TEST_CASE("parameter validation") {
  TissueParams p;
  CHECK_NOTHROW(p.validate());
  p.v_hi = 0.5;
  CHECK_THROWS(p.validate());
  p = {};
  p.rot_reduction = 1.0;
  CHECK_THROWS(p.validate());
}
