#include "brachy/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "brachy/errors.hpp"

namespace brachy {

std::string_view to_string(NeedleGauge g) noexcept { return g == NeedleGauge::G17 ? "17G" : "18G"; }

NeedleGauge gauge_from_string(std::string_view s) {
  if (s == "17G") return NeedleGauge::G17;
  if (s == "18G") return NeedleGauge::G18;
  throw std::invalid_argument("unknown needle gauge '" + std::string(s) + "'");
}

void RobotGeometry::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(std::isfinite(baseline_L) && baseline_L > 0.0, "baseline_L must be > 0");
  require(front_travel.lo < front_travel.hi, "front_travel is degenerate");
  require(rear_travel.lo < rear_travel.hi, "rear_travel is degenerate");
  require(z_travel.lo < z_travel.hi, "z_travel is degenerate");
  require(insertion_travel.lo < insertion_travel.hi, "insertion_travel is degenerate");
  require(max_inclination > 0.0 && max_inclination <= 45.0, "max_inclination must be in (0, 45]");
  require(joint_resolution_linear > 0.0, "joint_resolution_linear must be > 0");
  require(joint_resolution_rotation > 0.0, "joint_resolution_rotation must be > 0");
  require(calibration_error_bound >= 0.0, "calibration_error_bound must be >= 0");
  require(guide_standoff >= 0.0, "guide_standoff must be >= 0");
  const double reach = baseline_L * std::tan(deg2rad(max_inclination));
  require(rear_travel.lo <= front_travel.lo - reach && rear_travel.hi >= front_travel.hi + reach,
          "rear_travel must cover front_travel expanded by baseline_L*tan(max_inclination)");
}

double deg2rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }
double rad2deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }

double inclination(double pitch_deg, double yaw_deg) {
  const double tp = std::tan(deg2rad(pitch_deg));
  const double ty = std::tan(deg2rad(yaw_deg));
  return rad2deg(std::atan(std::hypot(tp, ty)));
}

Vec3 needle_direction(const NeedlePose& pose) {
  return Vec3(std::tan(deg2rad(pose.yaw)), std::tan(deg2rad(pose.pitch)), 1.0).normalized();
}

std::vector<std::string> out_of_travel(const JointState& j, const RobotGeometry& g) {
  std::vector<std::string> bad;
  if (!g.front_travel.contains(j.xf)) bad.emplace_back("xf");
  if (!g.front_travel.contains(j.yf)) bad.emplace_back("yf");
  if (!g.rear_travel.contains(j.xr)) bad.emplace_back("xr");
  if (!g.rear_travel.contains(j.yr)) bad.emplace_back("yr");
  if (!g.z_travel.contains(j.z_pre)) bad.emplace_back("z_pre");
  if (!g.insertion_travel.contains(j.d_ins)) bad.emplace_back("d_ins");
  return bad;
}

JointState ik_position(const NeedlePose& pose, const RobotGeometry& geom, const JointState& current) {
  if (!std::isfinite(pose.entry_x) || !std::isfinite(pose.entry_y) || !std::isfinite(pose.pitch) ||
      !std::isfinite(pose.yaw)) {
    throw std::invalid_argument("needle pose is not finite");
  }
  if (std::abs(pose.pitch) >= 90.0 || std::abs(pose.yaw) >= 90.0) {
    throw InclinationExceeded(90.0, geom.max_inclination);
  }
  const double incl = inclination(pose.pitch, pose.yaw);
  if (incl > geom.max_inclination) throw InclinationExceeded(incl, geom.max_inclination);

  JointState j = current;
  j.xf = pose.entry_x;
  j.yf = pose.entry_y;
  j.xr = pose.entry_x - geom.baseline_L * std::tan(deg2rad(pose.yaw));
  j.yr = pose.entry_y - geom.baseline_L * std::tan(deg2rad(pose.pitch));

  std::vector<std::string> bad;
  for (auto& name : out_of_travel(j, geom)) {
    if (name == "xf" || name == "yf" || name == "xr" || name == "yr") bad.push_back(std::move(name));
  }
  if (!bad.empty()) throw TravelExceeded(std::move(bad));
  return j;
}

NeedlePose fk_position(const JointState& joints, const RobotGeometry& geom) {
  std::vector<std::string> bad;
  for (auto& name : out_of_travel(joints, geom)) {
    if (name == "xf" || name == "yf" || name == "xr" || name == "yr") bad.push_back(std::move(name));
  }
  if (!bad.empty()) throw TravelExceeded(std::move(bad));
  return needle_pose(joints, geom);
}

NeedlePose needle_pose(const JointState& joints, const RobotGeometry& geom) noexcept {
  NeedlePose p;
  p.entry_x = joints.xf;
  p.entry_y = joints.yf;
  p.pitch = rad2deg(std::atan((joints.yf - joints.yr) / geom.baseline_L));
  p.yaw = rad2deg(std::atan((joints.xf - joints.xr) / geom.baseline_L));
  return p;
}

double tip_advance(const JointState& joints, const RobotGeometry& geom) noexcept {
  return joints.z_pre + joints.d_ins - geom.guide_standoff;
}

Vec3 tip_point(const NeedlePose& pose, const JointState& joints, const RobotGeometry& geom) {
  return Vec3(pose.entry_x, pose.entry_y, 0.0) + needle_direction(pose) * tip_advance(joints, geom);
}

double quantize_value(double value, double resolution) noexcept {
  return std::round(value / resolution) * resolution;
}

JointState quantize(const JointState& j, const RobotGeometry& g) {
  const double r = g.joint_resolution_linear;
  return JointState{quantize_value(j.xf, r),    quantize_value(j.yf, r),    quantize_value(j.xr, r),
                    quantize_value(j.yr, r),    quantize_value(j.z_pre, r), quantize_value(j.d_ins, r),
                    quantize_value(j.theta, g.joint_resolution_rotation)};
}

namespace {

// Tip from raw carriage positions; unlike fk_position it tolerates joints
// nudged just outside travel by calibration error.
Vec3 raw_tip(const JointState& j, const RobotGeometry& g) {
  const Vec3 dir = Vec3((j.xf - j.xr) / g.baseline_L, (j.yf - j.yr) / g.baseline_L, 1.0).normalized();
  return Vec3(j.xf, j.yf, 0.0) + dir * tip_advance(j, g);
}

}  // namespace

PrecisionStudy monte_carlo_precision(const RobotGeometry& geom, std::size_t samples, std::uint64_t seed,
                                     double max_depth) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> entry_x(geom.front_travel.lo, geom.front_travel.hi);
  std::uniform_real_distribution<double> entry_y(geom.front_travel.lo, geom.front_travel.hi);
  std::uniform_real_distribution<double> angle(-geom.max_inclination, geom.max_inclination);
  std::uniform_real_distribution<double> depth(0.0, std::min(max_depth, geom.insertion_travel.hi));
  std::uniform_real_distribution<double> calib(-geom.calibration_error_bound, geom.calibration_error_bound);

  PrecisionStudy out;
  double sum = 0.0;
  double sum_sq = 0.0;
  while (out.samples < samples) {
    NeedlePose pose{entry_x(rng), entry_y(rng), angle(rng), angle(rng)};
    if (inclination(pose.pitch, pose.yaw) > geom.max_inclination) continue;
    JointState ideal = ik_position(pose, geom);
    ideal.z_pre = geom.guide_standoff;
    ideal.d_ins = depth(rng);

    JointState real = quantize(ideal, geom);
    real.xf += calib(rng);
    real.yf += calib(rng);
    real.xr += calib(rng);
    real.yr += calib(rng);
    real.z_pre += calib(rng);
    real.d_ins += calib(rng);

    const double err = (raw_tip(real, geom) - tip_point(pose, ideal, geom)).norm();
    out.max_error = std::max(out.max_error, err);
    sum += err;
    sum_sq += err * err;
    ++out.samples;
  }
  if (out.samples > 0) {
    out.mean_error = sum / static_cast<double>(out.samples);
    out.rms_error = std::sqrt(sum_sq / static_cast<double>(out.samples));
  }
  return out;
}

}  // namespace brachy
