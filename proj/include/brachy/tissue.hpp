#pragma once

#include <vector>

namespace brachy {

// Quasi-static axial needle force model. Static base profile (linear loading
// up to puncture, then cutting + friction) scaled by independent velocity and
// rotation factors.
struct TissueParams {
  double k_load = 1.0;          // N/mm, pre-puncture loading stiffness
  double F_punct = 5.0;         // N, puncture threshold (static)
  double F_cut = 1.0;           // N, cutting force after puncture
  double mu_fric = 0.03;        // N per inserted mm past the puncture
  double omega_ref = 10.0;      // rps
  double rot_reduction = 0.25;  // force reduction at >= omega_ref
  double v_lo = 1.0;            // mm/s
  double v_hi = 5.0;            // mm/s
  double vel_reduction = 0.15;  // force reduction at >= v_hi relative to <= v_lo
  double k_prostate = 1.0;      // N/mm
  double k_bone = 10.0;         // N/mm
  double tissue_plane_z = 0.0;  // mm

  void validate() const;  // throws std::invalid_argument
  bool operator==(const TissueParams&) const = default;
};

struct TissueState {
  double tip_depth = 0.0;  // mm beyond the tissue plane, along the needle
  bool punctured = false;
  double puncture_depth = 0.0;
  double prostate_displacement = 0.0;
  double last_force = 0.0;

  bool operator==(const TissueState&) const = default;
};

struct PunctureEvent {
  double depth = 0.0;
  double peak_force = 0.0;
};

struct StepResult {
  TissueState state;
  double force = 0.0;
  std::vector<PunctureEvent> events;
};

double rotation_factor(double omega, const TissueParams& p);
double velocity_factor(double v, const TissueParams& p);

// Unmodulated force for the current state.
double base_force(const TissueState& s, const TissueParams& p) noexcept;

double axial_force(const TissueState& s, double v, double omega, const TissueParams& p);

// Advances the tip by delta_depth >= 0. The returned force at the puncture
// step is the peak that ruptured the capsule; later steps see the cutting
// and friction force.
StepResult step(const TissueState& s, double delta_depth, double v, double omega, const TissueParams& p);

// Force with the needle at rest or withdrawn: displacement relaxes with it.
TissueState with_force(TissueState s, double force, const TissueParams& p);

double bone_contact_force(double overlap, const TissueParams& p);

// Longitudinal seed placement error: the prostate displacement at release.
double seed_offset(const TissueState& s) noexcept;

}  // namespace brachy
