#include "brachy/safety.hpp"

#include <algorithm>
#include <stdexcept>

#include "brachy/errors.hpp"

namespace brachy {

std::string_view to_string(Engagement e) noexcept { return e == Engagement::Engaged ? "ENGAGED" : "TRIPPED"; }

InterlockUpdate update(const EngagementState& s, double axial_force) {
  if (axial_force < 0) throw std::invalid_argument("axial force must be >= 0");
  InterlockUpdate out{s, std::nullopt};
  if (!s.tripped() && axial_force > s.release_threshold) {
    out.state.status = Engagement::Tripped;
    out.state.trip_force = axial_force;
    out.trip = TripEvent{axial_force, s.release_threshold};
  }
  return out;
}

double transmitted_advance(const EngagementState& s, double commanded) noexcept {
  return s.tripped() ? 0.0 : commanded;
}

double manual_retract(const EngagementState& s, bool emergency_manual, double d_ins, double amount) {
  if (!s.tripped() && !emergency_manual) {
    throw NotPermitted("manual retraction requires a tripped release or emergency manual mode");
  }
  if (amount < 0) throw std::invalid_argument("retraction amount must be >= 0");
  return std::max(0.0, d_ins - amount);
}

EngagementState rehome(const EngagementState& s, double d_ins) {
  if (d_ins > 0) throw NotAtHome(d_ins);
  EngagementState out = s;
  out.status = Engagement::Engaged;
  out.trip_force = 0.0;
  return out;
}

}  // namespace brachy
