#include "brachy/workspace.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "brachy/errors.hpp"

namespace brachy {

int TemplateGrid::holes_per_axis() const { return static_cast<int>(std::lround(extent / spacing)) + 1; }

void TemplateGrid::validate() const {
  if (!(spacing > 0.0) || !(extent > 0.0)) throw std::invalid_argument("template grid spacing and extent must be > 0");
  const double n = extent / spacing;
  if (std::abs(n - std::round(n)) > 1e-9) throw std::invalid_argument("template extent must be a multiple of spacing");
}

std::pair<double, double> grid_to_entry(int col, int row, const TemplateGrid& grid) {
  const int n = grid.holes_per_axis();
  if (col < 0 || row < 0 || col >= n || row >= n) throw IndexOutOfGrid(col, row);
  return {-grid.extent / 2.0 + col * grid.spacing, -grid.extent / 2.0 + row * grid.spacing};
}

// ---------------------------------------------------------------------------
// Reachability

namespace {

struct SweepTable {
  std::vector<double> magnitudes;                           // degrees, ascending
  std::vector<std::vector<std::pair<double, double>>> offsets;  // per magnitude, rear offset for each azimuth
};

SweepTable make_sweep(const RobotGeometry& geom) {
  SweepTable t;
  for (int m = 0; m <= static_cast<int>(std::floor(geom.max_inclination)); ++m) t.magnitudes.push_back(m);
  if (t.magnitudes.back() < geom.max_inclination) t.magnitudes.push_back(geom.max_inclination);
  for (double m : t.magnitudes) {
    const double reach = geom.baseline_L * std::tan(deg2rad(m));
    std::vector<std::pair<double, double>> half;
    for (int a = 0; a < 180; ++a) {
      half.emplace_back(reach * std::cos(deg2rad(a)), reach * std::sin(deg2rad(a)));
    }
    // Opposite azimuths are exact negations so the sweep is point-symmetric.
    std::vector<std::pair<double, double>> all = half;
    for (const auto& [dx, dy] : half) all.emplace_back(-dx, -dy);
    t.offsets.push_back(std::move(all));
  }
  return t;
}

std::optional<double> max_feasible(double x, double y, const RobotGeometry& geom, const SweepTable& sweep) {
  if (!geom.front_travel.contains(x) || !geom.front_travel.contains(y)) return std::nullopt;
  std::optional<double> best;
  for (std::size_t i = 0; i < sweep.magnitudes.size(); ++i) {
    for (const auto& [dx, dy] : sweep.offsets[i]) {
      if (geom.rear_travel.contains(x - dx) && geom.rear_travel.contains(y - dy)) {
        best = sweep.magnitudes[i];
        break;
      }
    }
  }
  return best;
}

}  // namespace

std::optional<double> max_feasible_inclination(double x, double y, const RobotGeometry& geom) {
  return max_feasible(x, y, geom, make_sweep(geom));
}

ReachabilityMap reachability_map(const RobotGeometry& geom, double step, std::optional<double> half_extent) {
  if (!(step > 0.0)) throw std::invalid_argument("reachability step must be > 0");
  const double front = std::max(std::abs(geom.front_travel.lo), std::abs(geom.front_travel.hi));
  const double half = half_extent.value_or(front + 3.0 * step);
  const int n = static_cast<int>(std::floor(half / step + 1e-9));

  ReachabilityMap map;
  for (int k = -n; k <= n; ++k) map.xs.push_back(k * step);
  map.ys = map.xs;
  const SweepTable sweep = make_sweep(geom);
  map.cells.reserve(map.xs.size() * map.ys.size());
  for (double y : map.ys) {
    for (double x : map.xs) map.cells.push_back(max_feasible(x, y, geom, sweep));
  }
  return map;
}

std::optional<double> ReachabilityMap::lookup(double x, double y) const {
  auto index = [](const std::vector<double>& axis, double v) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < axis.size(); ++i) {
      if (std::abs(axis[i] - v) < 1e-9) return i;
    }
    return std::nullopt;
  };
  const auto c = index(xs, x);
  const auto r = index(ys, y);
  if (!c || !r) throw std::out_of_range("point is not a sample of the reachability map");
  return at(*c, *r);
}

std::string ReachabilityMap::to_text() const {
  std::ostringstream os;
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return std::string(buf);
  };
  os << "# max feasible inclination (deg) per entry point; X = unreachable\n";
  os << "# columns: x from " << num(xs.front()) << " to " << num(xs.back()) << " mm, ascending left to right\n";
  os << "# rows: y from " << num(ys.back()) << " to " << num(ys.front()) << " mm, descending top to bottom\n";
  for (std::size_t r = ys.size(); r-- > 0;) {
    for (std::size_t c = 0; c < xs.size(); ++c) {
      if (c) os << ' ';
      const auto& v = at(c, r);
      os << (v ? num(*v) : std::string("X"));
    }
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Clearance

double segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1) {
  constexpr double eps = 1e-12;
  const Vec3 d1 = p1 - p0;
  const Vec3 d2 = q1 - q0;
  const Vec3 r = p0 - q0;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  double s = 0.0;
  double t = 0.0;
  if (a <= eps && e <= eps) return r.norm();
  if (a <= eps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= eps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > eps ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p0 + d1 * s) - (q0 + d2 * t)).norm();
}

double clearance(const NeedlePose& pose, double length, const ArchObstacle& arch) {
  if (!(length > 0.0)) throw std::invalid_argument("needle length must be > 0");
  const Vec3 entry(pose.entry_x, pose.entry_y, 0.0);
  const Vec3 end = entry + needle_direction(pose) * length;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& cap : arch.capsules) {
    best = std::min(best, segment_distance(entry, end, cap.a, cap.b) - cap.radius);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Access planning

namespace {

struct Candidate {
  bool feasible = false;
  AccessSolution solution;
};

class AccessProblem {
 public:
  AccessProblem(const Vec3& target, const ArchObstacle& arch, const RobotGeometry& geom, double min_clearance)
      : target_(target), arch_(arch), geom_(geom), min_clearance_(min_clearance) {}

  Candidate evaluate(double pitch, double yaw) const {
    Candidate c;
    if (std::abs(pitch) >= 90.0 || std::abs(yaw) >= 90.0) return c;
    const double incl = inclination(pitch, yaw);
    if (incl > geom_.max_inclination) return c;
    NeedlePose pose{target_.x() - target_.z() * std::tan(deg2rad(yaw)),
                    target_.y() - target_.z() * std::tan(deg2rad(pitch)), pitch, yaw};
    const Vec3 entry(pose.entry_x, pose.entry_y, 0.0);
    const double length = (target_ - entry).norm();
    if (!geom_.insertion_travel.contains(length)) return c;
    try {
      ik_position(pose, geom_);
    } catch (const Error&) {
      return c;
    }
    const double clr = arch_.capsules.empty() ? std::numeric_limits<double>::infinity()
                                              : clearance(pose, length, arch_);
    if (clr < min_clearance_) return c;
    c.feasible = true;
    c.solution = AccessSolution{pose, incl, clr, length};
    return c;
  }

 private:
  Vec3 target_;
  const ArchObstacle& arch_;
  const RobotGeometry& geom_;
  double min_clearance_;
};

bool better(const AccessSolution& a, const AccessSolution& b) {
  if (a.inclination != b.inclination) return a.inclination < b.inclination;
  if (a.pose.pitch != b.pose.pitch) return a.pose.pitch < b.pose.pitch;
  return a.pose.yaw < b.pose.yaw;
}

}  // namespace

AccessSolution plan_access(const Vec3& target, const ArchObstacle& arch, const RobotGeometry& geom,
                           double min_clearance) {
  if (!(target.z() > 0.0)) throw std::invalid_argument("access target must lie beyond the template plane");
  const AccessProblem problem(target, arch, geom, min_clearance);

  if (auto c = problem.evaluate(0.0, 0.0); c.feasible) return c.solution;

  constexpr double coarse = 0.5;
  constexpr double fine = 0.01;
  const int n = static_cast<int>(std::floor(geom.max_inclination / coarse));
  std::optional<AccessSolution> best;
  for (int i = -n; i <= n; ++i) {
    for (int j = -n; j <= n; ++j) {
      auto c = problem.evaluate(i * coarse, j * coarse);
      if (c.feasible && (!best || better(c.solution, *best))) best = c.solution;
    }
  }
  if (!best) {
    std::ostringstream os;
    os << "no direction within " << geom.max_inclination << " deg reaches (" << target.x() << ", " << target.y()
       << ", " << target.z() << ") with clearance >= " << min_clearance << " mm";
    throw NoAccess(os.str());
  }

  // Walk the ray toward the horizontal to find the first feasible scale,
  // then bisect the infeasible/feasible bracket.
  const double p0 = best->pose.pitch;
  const double y0 = best->pose.yaw;
  const double span = std::max(std::abs(p0), std::abs(y0));
  const int steps = std::max(1, static_cast<int>(std::ceil(span / coarse)));
  double lo = 0.0;
  double hi = 1.0;
  for (int k = 1; k <= steps; ++k) {
    const double s = static_cast<double>(k) / steps;
    if (problem.evaluate(s * p0, s * y0).feasible) {
      hi = s;
      break;
    }
    lo = s;
  }
  while ((hi - lo) * span > fine / 4.0) {
    const double mid = 0.5 * (lo + hi);
    (problem.evaluate(mid * p0, mid * y0).feasible ? hi : lo) = mid;
  }
  AccessSolution sol = problem.evaluate(hi * p0, hi * y0).solution;

  // Local pattern search lets the azimuth settle off the coarse ray.
  for (double h = coarse / 2.0; h >= fine / 2.0; h /= 2.0) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (int dp = -1; dp <= 1; ++dp) {
        for (int dy = -1; dy <= 1; ++dy) {
          if (dp == 0 && dy == 0) continue;
          auto c = problem.evaluate(sol.pose.pitch + dp * h, sol.pose.yaw + dy * h);
          if (c.feasible && c.solution.inclination < sol.inclination - 1e-12) {
            sol = c.solution;
            improved = true;
          }
        }
      }
    }
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Plan resolution and reference-frame shifts

ResolvedNeedle resolve_needle(const NeedleTask& task, const Plan& plan, const RobotGeometry& geom) {
  const Vec3 shift = plan.total_shift();
  ResolvedNeedle out;
  out.id = task.id;

  if (const auto* grid = std::get_if<GridTarget>(&task.target)) {
    const auto [x, y] = grid_to_entry(grid->col, grid->row);
    out.target = Vec3(x, y, task.depth) + shift;
    if (!(out.target.z() > 0.0)) throw TravelExceeded({"d_ins"});
    if (grid->auto_access) {
      const AccessSolution sol = plan_access(out.target, plan.obstacles.arch, geom, plan.obstacles.min_clearance);
      out.pose = sol.pose;
      out.d_ins = sol.length;
    } else {
      out.pose = NeedlePose{out.target.x(), out.target.y(), 0.0, 0.0};
      out.d_ins = out.target.z();
    }
  } else {
    const NeedlePose& p = std::get<PoseTarget>(task.target).pose;
    const Vec3 dir = needle_direction(p);
    out.target = Vec3(p.entry_x, p.entry_y, 0.0) + dir * task.depth + shift;
    out.d_ins = out.target.z() / dir.z();
    const Vec3 entry = out.target - dir * out.d_ins;
    out.pose = NeedlePose{entry.x(), entry.y(), p.pitch, p.yaw};
  }

  ik_position(out.pose, geom);
  if (!geom.insertion_travel.contains(out.d_ins)) throw TravelExceeded({"d_ins"});
  out.inclination = inclination(out.pose.pitch, out.pose.yaw);
  out.clearance = plan.obstacles.arch.capsules.empty()
                      ? std::numeric_limits<double>::infinity()
                      : clearance(out.pose, std::max(out.d_ins, 1e-9), plan.obstacles.arch);
  return out;
}

Plan apply_prostate_shift(const Plan& plan, const Vec3& offset, const RobotGeometry& geom) {
  Plan out = plan;
  if (offset.isZero(0.0)) return out;
  auto& shifts = out.metadata.shifts;
  if (!shifts.empty() && shifts.back() == -offset) {
    shifts.pop_back();
  } else {
    shifts.push_back(offset);
  }
  for (const auto& task : out.needles) resolve_needle(task, out, geom);
  return out;
}

}  // namespace brachy
