#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace brachy {

using Vec3 = Eigen::Vector3d;

// Closed interval [lo, hi] in mm.
struct Travel {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const noexcept { return v >= lo && v <= hi; }
  double span() const noexcept { return hi - lo; }
  bool operator==(const Travel&) const = default;
};

enum class NeedleGauge { G17, G18 };

std::string_view to_string(NeedleGauge g) noexcept;
NeedleGauge gauge_from_string(std::string_view s);

// Geometry of the positioning parallelogram, the preposition rail and the
// insertion axis. Frame: z from robot into patient, template plane and front
// rail plane at z = 0, rear rail plane at z = -baseline_L.
struct RobotGeometry {
  double baseline_L = 100.0;
  Travel front_travel{-52.5, 52.5};
  Travel rear_travel{-112.5, 112.5};
  Travel z_travel{0.0, 100.0};
  Travel insertion_travel{0.0, 150.0};
  double guide_standoff = 20.0;
  double max_inclination = 30.0;
  double joint_resolution_linear = 0.05;
  double joint_resolution_rotation = 1.0;
  double calibration_error_bound = 0.15;
  NeedleGauge needle_gauge = NeedleGauge::G18;

  // Throws std::invalid_argument naming the first violated invariant.
  void validate() const;

  bool operator==(const RobotGeometry&) const = default;
};

struct JointState {
  double xf = 0.0;
  double yf = 0.0;
  double xr = 0.0;
  double yr = 0.0;
  double z_pre = 0.0;
  double d_ins = 0.0;
  double theta = 0.0;  // needle roll, degrees, unbounded

  bool operator==(const JointState&) const = default;
};

struct NeedlePose {
  double entry_x = 0.0;
  double entry_y = 0.0;
  double pitch = 0.0;  // degrees, + tip up
  double yaw = 0.0;    // degrees, + right

  bool operator==(const NeedlePose&) const = default;
};

double deg2rad(double deg) noexcept;
double rad2deg(double rad) noexcept;

// Angle between the needle axis and +z, degrees. |pitch|, |yaw| < 90.
double inclination(double pitch_deg, double yaw_deg);

// Unit needle direction, proportional to (tan yaw, tan pitch, 1).
Vec3 needle_direction(const NeedlePose& pose);

// Names of linear joints outside their travel (empty when all are in range).
std::vector<std::string> out_of_travel(const JointState& joints, const RobotGeometry& geom);

// Sets xf, yf, xr, yr for the pose; every other axis is copied from `current`.
JointState ik_position(const NeedlePose& pose, const RobotGeometry& geom, const JointState& current = {});

NeedlePose fk_position(const JointState& joints, const RobotGeometry& geom);

// fk_position without the travel check.
NeedlePose needle_pose(const JointState& joints, const RobotGeometry& geom) noexcept;

// Distance of the tip beyond the template plane, measured along the needle.
double tip_advance(const JointState& joints, const RobotGeometry& geom) noexcept;

Vec3 tip_point(const NeedlePose& pose, const JointState& joints, const RobotGeometry& geom);

// Snaps linear joints and theta to the actuator step grid. Idempotent.
double quantize_value(double value, double resolution) noexcept;
JointState quantize(const JointState& joints, const RobotGeometry& geom);

struct PrecisionStudy {
  std::size_t samples = 0;
  double max_error = 0.0;
  double mean_error = 0.0;
  double rms_error = 0.0;
};

// Monte-Carlo tip placement error of quantized, miscalibrated joints against
// the ideal closed-form tip. Poses are drawn uniformly over the front travel
// with inclination <= max_inclination, insertion depth uniform in
// [0, max_depth] with the tip prepositioned at the template plane.
PrecisionStudy monte_carlo_precision(const RobotGeometry& geom, std::size_t samples, std::uint64_t seed,
                                     double max_depth = 150.0);

}  // namespace brachy
