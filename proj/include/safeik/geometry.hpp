#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "safeik/capsule.hpp"
#include "safeik/robot_model.hpp"

namespace safeik {

struct SegmentClosest {
  double s = 0.0;  // parameter on segment a, in [0, 1]
  double t = 0.0;  // parameter on segment b, in [0, 1]
  double dist = 0.0;
};

SegmentClosest segment_closest_points(const Vec3& a0, const Vec3& a1, const Vec3& b0,
                                      const Vec3& b1);

/// Signed distance between two capsules with its witness geometry.
///
/// phi = |wa - wb| - ra - rb where wa, wb are the closest points of the two
/// center segments. `normal` points from b's witness to a's witness. For pairs
/// produced by the robot/obstacle queries, a is the robot collider and b the
/// obstacle.
struct DistanceWitness {
  double phi = 0.0;
  Vec3 point_a = Vec3::Zero();  // on the surface of a, along the witness line
  Vec3 point_b = Vec3::Zero();
  Vec3 segment_a = Vec3::Zero();  // witness points on the center segments
  Vec3 segment_b = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  int collider = -1;  // index into RobotModel::colliders (or the link list)
  int obstacle = -1;
  bool degenerate = false;  // center witnesses coincide; normal undefined
};

DistanceWitness capsule_signed_distance(const Capsule& a, const Capsule& b);

struct ProximityResult {
  DistanceWitness global;
  std::vector<DistanceWitness> per_obstacle;  // closest link per obstacle
};

/// All link-obstacle pairs, row-major by link. Evaluated by the batched kernel.
std::vector<DistanceWitness> pairwise_distances(std::span<const Capsule> links,
                                                std::span<const Capsule> obstacles);

/// Closest pair per obstacle and overall. std::nullopt when either list is
/// empty ("no obstacles": callers treat barrier constraints as absent).
std::optional<ProximityResult> min_robot_obstacle_distance(std::span<const Capsule> links,
                                                           std::span<const Capsule> obstacles);

struct DistanceGradient {
  Eigen::VectorXd grad;
  Vec3 normal = Vec3::Zero();  // direction actually used
  bool degenerate = false;
};

/// Configuration-space gradient of a robot/obstacle signed distance:
/// normal^T J_p(q, segment_a) for the link that owns `witness.collider`.
/// When the witness is degenerate, `fallback_normal` (e.g. the previous tick's
/// normal) is used if given; otherwise the gradient is zero and flagged.
DistanceGradient distance_gradient(const RobotModel& model, const Kinematics& kin,
                                   const DistanceWitness& witness,
                                   const std::optional<Vec3>& fallback_normal = std::nullopt);
DistanceGradient distance_gradient(const RobotModel& model, const JointVector& q,
                                   const DistanceWitness& witness,
                                   const std::optional<Vec3>& fallback_normal = std::nullopt);

}  // namespace safeik
