#include "brachy/tissue.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace brachy {

void TissueParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(k_load > 0 && F_punct > 0 && F_cut > 0 && mu_fric > 0 && k_prostate > 0 && k_bone > 0,
          "tissue stiffnesses and forces must be > 0");
  require(omega_ref > 0, "omega_ref must be > 0");
  require(rot_reduction >= 0 && rot_reduction < 1, "rot_reduction must be in [0, 1)");
  require(vel_reduction >= 0 && vel_reduction < 1, "vel_reduction must be in [0, 1)");
  require(v_lo > 0 && v_lo < v_hi, "require 0 < v_lo < v_hi");
}

double rotation_factor(double omega, const TissueParams& p) {
  if (omega < 0) throw std::invalid_argument("omega must be >= 0");
  return 1.0 - p.rot_reduction * std::min(omega, p.omega_ref) / p.omega_ref;
}

double velocity_factor(double v, const TissueParams& p) {
  if (!(v > 0)) throw std::invalid_argument("insertion speed must be > 0");
  const double frac = std::log(v / p.v_lo) / std::log(p.v_hi / p.v_lo);
  return 1.0 - p.vel_reduction * std::clamp(frac, 0.0, 1.0);
}

double base_force(const TissueState& s, const TissueParams& p) noexcept {
  if (s.tip_depth <= 0.0) return 0.0;
  if (!s.punctured) return p.k_load * s.tip_depth;
  return p.F_cut + p.mu_fric * (s.tip_depth - s.puncture_depth);
}

double axial_force(const TissueState& s, double v, double omega, const TissueParams& p) {
  return base_force(s, p) * velocity_factor(v, p) * rotation_factor(omega, p);
}

StepResult step(const TissueState& s, double delta_depth, double v, double omega, const TissueParams& p) {
  if (delta_depth < 0) throw std::invalid_argument("delta_depth must be >= 0");
  const double modulation = velocity_factor(v, p) * rotation_factor(omega, p);

  StepResult r;
  r.state = s;
  r.state.tip_depth += delta_depth;
  // Comparing the unmodulated load against F_punct is the same test as the
  // modulated force against the modulated threshold, without rounding drift.
  if (!r.state.punctured && p.k_load * r.state.tip_depth >= p.F_punct) {
    r.force = p.k_load * r.state.tip_depth * modulation;
    r.state.punctured = true;
    r.state.puncture_depth = r.state.tip_depth;
    r.events.push_back(PunctureEvent{r.state.tip_depth, r.force});
  } else {
    r.force = base_force(r.state, p) * modulation;
  }
  r.state.last_force = r.force;
  r.state.prostate_displacement = r.force / p.k_prostate;
  return r;
}

TissueState with_force(TissueState s, double force, const TissueParams& p) {
  s.last_force = std::max(0.0, force);
  s.prostate_displacement = s.last_force / p.k_prostate;
  return s;
}

double bone_contact_force(double overlap, const TissueParams& p) {
  if (overlap < 0) throw std::invalid_argument("overlap must be >= 0");
  return p.k_bone * overlap;
}

double seed_offset(const TissueState& s) noexcept { return s.prostate_displacement; }

}  // namespace brachy
