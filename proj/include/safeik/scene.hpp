#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "safeik/capsule.hpp"
#include "safeik/pose.hpp"

namespace safeik {

inline constexpr double kDefaultSpeedCap = 0.025;  // m/s

/// Sinusoidal translation along a fixed axis.
class MotionProfile {
 public:
  /// Throws std::invalid_argument if the peak speed 2 pi A / period exceeds
  /// the cap or any field is out of range.
  MotionProfile(const Vec3& axis, double amplitude, double period, double phase,
                double speed_cap = kDefaultSpeedCap);

  const Vec3& axis() const { return axis_; }
  double amplitude() const { return amplitude_; }
  double period() const { return period_; }
  double phase() const { return phase_; }
  double speed_cap() const { return speed_cap_; }
  double peak_speed() const;

  Vec3 offset(double t) const;

 private:
  Vec3 axis_;
  double amplitude_;
  double period_;
  double phase_;
  double speed_cap_;
};

struct SceneObstacle {
  Capsule base;
  std::optional<MotionProfile> motion;
};

struct Scene {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<SceneObstacle> obstacles;
  std::vector<Pose> pick_poses;  // clutter scene only
  std::optional<Pose> basket;
};

std::vector<Capsule> obstacle_poses_at(const Scene& scene, double t);

struct TrajectorySample {
  double t = 0.0;
  Pose pose;
};

/// Waypoints joined by minimum-jerk (quintic) time scaling: linear in
/// position, SLERP in orientation, at rest at every waypoint.
class ReferenceTrajectory {
 public:
  ReferenceTrajectory() = default;
  /// Throws std::invalid_argument unless times strictly increase and all
  /// quaternions are unit.
  explicit ReferenceTrajectory(std::vector<TrajectorySample> samples);

  const std::vector<TrajectorySample>& samples() const { return samples_; }
  double duration() const;
  bool empty() const { return samples_.empty(); }
  /// Clamped to the first and last sample outside the time span.
  Pose at(double t) const;

 private:
  std::vector<TrajectorySample> samples_;
};

enum class SceneKind { dynamic, shelf, clutter, empty };

std::string_view to_string(SceneKind kind);
std::optional<SceneKind> parse_scene_kind(std::string_view text);

struct Scenario {
  Scene scene;
  ReferenceTrajectory reference;
};

/// Built-in scenes for the bundled arm. The same seed always yields
/// bit-identical scenes and trajectories.
Scenario make_scene(SceneKind kind, std::uint64_t seed);

}  // namespace safeik
