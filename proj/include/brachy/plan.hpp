#pragma once

#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "brachy/kinematics.hpp"

namespace brachy {

struct NoRotation {
  bool operator==(const NoRotation&) const = default;
};

struct ContinuousRotation {
  double omega = 10.0;  // rps
  bool operator==(const ContinuousRotation&) const = default;
};

// Rotates the needle by `step` degrees each time the insertion axis has
// advanced another `interval` mm.
struct IndexedRotation {
  double step = 180.0;
  double interval = 10.0;
  bool operator==(const IndexedRotation&) const = default;
};

using Rotation = std::variant<NoRotation, ContinuousRotation, IndexedRotation>;

struct MotionProfile {
  double insertion_speed = 5.0;  // mm/s
  Rotation rotation = NoRotation{};

  // Continuous spin rate seen by the tissue model (0 unless continuous).
  double omega() const noexcept;
  void validate() const;  // throws std::invalid_argument

  bool operator==(const MotionProfile&) const = default;
};

inline constexpr double kMinInsertionSpeed = 1.0;
inline constexpr double kMaxInsertionSpeed = 10.0;
inline constexpr double kMaxOmega = 15.0;

struct SeedSpec {
  double offset_from_tip = 0.0;
  bool operator==(const SeedSpec&) const = default;
};

// A template hole. With auto_access the tip target is the hole's horizontal
// target point and the planner chooses an inclined path around the arch.
struct GridTarget {
  int col = 6;
  int row = 6;
  bool auto_access = false;
  bool operator==(const GridTarget&) const = default;
};

struct PoseTarget {
  NeedlePose pose;
  bool operator==(const PoseTarget&) const = default;
};

using NeedleTarget = std::variant<GridTarget, PoseTarget>;

struct NeedleTask {
  std::string id;
  NeedleTarget target = GridTarget{};
  // Grid targets: z of the tip target. Pose targets: insertion along the needle.
  double depth = 0.0;
  MotionProfile profile;
  std::vector<SeedSpec> seeds{SeedSpec{}};

  bool operator==(const NeedleTask&) const = default;
};

struct Capsule {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  double radius = 1.0;
  bool operator==(const Capsule& o) const { return a == o.a && b == o.b && radius == o.radius; }
};

struct ArchObstacle {
  std::vector<Capsule> capsules;
  bool operator==(const ArchObstacle&) const = default;
};

// Bone occupying z >= surface_z over a lateral window.
struct BoneObstacle {
  double surface_z = 0.0;
  Travel x{-1000.0, 1000.0};
  Travel y{-1000.0, 1000.0};
  bool operator==(const BoneObstacle&) const = default;
};

struct Obstacles {
  ArchObstacle arch;
  std::vector<BoneObstacle> bone;
  double min_clearance = 0.5;
  bool operator==(const Obstacles&) const = default;
};

struct PlanMetadata {
  std::vector<Vec3> shifts;
  bool operator==(const PlanMetadata& o) const { return shifts == o.shifts; }
};

struct Plan {
  int version = 1;
  // Partial overrides with the same schema as the config file sections.
  nlohmann::json geometry = nlohmann::json::object();
  nlohmann::json tissue = nlohmann::json::object();
  nlohmann::json safety = nlohmann::json::object();
  Obstacles obstacles;
  std::vector<NeedleTask> needles;
  PlanMetadata metadata;

  Vec3 total_shift() const;
  const NeedleTask* find(const std::string& id) const;

  bool operator==(const Plan&) const = default;
};

}  // namespace brachy
