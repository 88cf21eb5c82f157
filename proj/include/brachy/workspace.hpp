#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "brachy/kinematics.hpp"
#include "brachy/plan.hpp"

namespace brachy {

struct TemplateGrid {
  double spacing = 5.0;
  double extent = 60.0;

  int holes_per_axis() const;  // extent/spacing + 1
  void validate() const;
};

std::pair<double, double> grid_to_entry(int col, int row, const TemplateGrid& grid = {});

// Max feasible inclination (degrees) for each sampled entry point; nullopt
// for entry points outside the front travel. Row r holds y = ys[r], column c
// holds x = xs[c]; both axes ascend.
struct ReachabilityMap {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<std::optional<double>> cells;

  const std::optional<double>& at(std::size_t col, std::size_t row) const { return cells[row * xs.size() + col]; }
  std::optional<double> lookup(double x, double y) const;

  // Text grid: top row is the largest y; columns ascend in x. Unreachable = X.
  std::string to_text() const;
};

// Samples x, y = k*step for |k*step| <= half_extent. When half_extent is
// not given the grid extends three steps beyond the front travel.
ReachabilityMap reachability_map(const RobotGeometry& geom, double step,
                                 std::optional<double> half_extent = std::nullopt);

// Largest magnitude on a 1-degree sweep (plus max_inclination itself) for
// which some azimuth keeps the carriages in travel; nullopt if entry is
// outside the front travel.
std::optional<double> max_feasible_inclination(double x, double y, const RobotGeometry& geom);

double segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1);

// min over capsules of (distance(needle segment, capsule axis) - radius).
// +inf when the arch has no capsules.
double clearance(const NeedlePose& pose, double length, const ArchObstacle& arch);

struct AccessSolution {
  NeedlePose pose;
  double inclination = 0.0;
  double clearance = 0.0;
  double length = 0.0;  // entry to target along the needle
};

AccessSolution plan_access(const Vec3& target, const ArchObstacle& arch, const RobotGeometry& geom,
                           double min_clearance);

// A needle task turned into machine terms for the current plan shift.
struct ResolvedNeedle {
  std::string id;
  NeedlePose pose;
  double d_ins = 0.0;  // insertion depth with the tip prepositioned at the template plane
  Vec3 target = Vec3::Zero();
  double inclination = 0.0;
  double clearance = 0.0;
};

ResolvedNeedle resolve_needle(const NeedleTask& task, const Plan& plan, const RobotGeometry& geom);

// Translates every target by offset (entries follow, depths recomputed).
// The original is not modified; an offset that exactly cancels the last
// recorded shift removes it instead of appending.
Plan apply_prostate_shift(const Plan& plan, const Vec3& offset, const RobotGeometry& geom);

}  // namespace brachy
