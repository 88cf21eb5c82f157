#pragma once

#include <optional>
#include <string_view>

namespace brachy {

enum class Engagement { Engaged, Tripped };

std::string_view to_string(Engagement e) noexcept;

// Ball-plunger release between the insertion ball screw and the needle
// carriage. Once tripped the carriage is decoupled until rehomed.
struct EngagementState {
  Engagement status = Engagement::Engaged;
  double trip_force = 0.0;  // meaningful only when tripped
  double release_threshold = 8.0;

  bool tripped() const noexcept { return status == Engagement::Tripped; }
  bool operator==(const EngagementState&) const = default;
};

struct TripEvent {
  double force = 0.0;
  double threshold = 0.0;
};

struct InterlockUpdate {
  EngagementState state;
  std::optional<TripEvent> trip;
};

// Trips exactly when axial_force > release_threshold; absorbing until rehome.
InterlockUpdate update(const EngagementState& s, double axial_force);

// Needle advance actually transmitted for a commanded advance.
double transmitted_advance(const EngagementState& s, double commanded) noexcept;

// New insertion position after a manual pull of `amount` mm (floored at 0).
// Throws NotPermitted unless tripped or in emergency manual mode.
double manual_retract(const EngagementState& s, bool emergency_manual, double d_ins, double amount);

// Re-seats the plunger. Throws NotAtHome when the needle is not fully retracted.
EngagementState rehome(const EngagementState& s, double d_ins);

}  // namespace brachy
