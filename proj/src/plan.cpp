#include "brachy/plan.hpp"

#include <cmath>
#include <stdexcept>

namespace brachy {

double MotionProfile::omega() const noexcept {
  if (const auto* c = std::get_if<ContinuousRotation>(&rotation)) return c->omega;
  return 0.0;
}

void MotionProfile::validate() const {
  if (!(insertion_speed >= kMinInsertionSpeed && insertion_speed <= kMaxInsertionSpeed)) {
    throw std::invalid_argument("insertion speed must be within [1, 10] mm/s");
  }
  if (const auto* c = std::get_if<ContinuousRotation>(&rotation)) {
    if (!(c->omega >= 0.0 && c->omega <= kMaxOmega)) throw std::invalid_argument("omega must be within [0, 15] rps");
  }
  if (const auto* i = std::get_if<IndexedRotation>(&rotation)) {
    if (!std::isfinite(i->step)) throw std::invalid_argument("indexed rotation step must be finite");
    if (!(i->interval > 0.0)) throw std::invalid_argument("indexed rotation interval must be > 0");
  }
}

Vec3 Plan::total_shift() const {
  Vec3 s = Vec3::Zero();
  for (const auto& v : metadata.shifts) s += v;
  return s;
}

const NeedleTask* Plan::find(const std::string& id) const {
  for (const auto& n : needles) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

}  // namespace brachy
