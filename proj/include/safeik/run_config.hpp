#pragma once

// Declarative run configuration: robot, scene, reference, solver parameters,
// seeds and tick length. See data/README.md for the line format.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "safeik/blending.hpp"
#include "safeik/ik_solver.hpp"
#include "safeik/robot_model.hpp"
#include "safeik/scene.hpp"

namespace safeik {

struct RunConfig {
  std::string robot_path;  // resolved against the config file's directory
  SceneKind scene = SceneKind::empty;
  double dt = 1.0 / 90.0;
  std::optional<double> duration;  // default: the reference duration
  std::uint64_t first_seed = 1;
  std::optional<JointVector> home;
  IkParams params;

  // Explicit geometry; when present it replaces the built-in scene's.
  std::vector<SceneObstacle> obstacles;
  std::vector<TrajectorySample> waypoints;

  // Scripted operator for replay mode; blended with the reference when present.
  std::vector<TrajectorySample> human_waypoints;
  ArbitrationParams arbitration;

  void validate() const;
};

/// Throws ParseError with the offending line and field.
RunConfig parse_run_config(std::string_view text, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);

/// The default starting posture of the bundled arm: elbow bent, tool forward.
JointVector default_home(const RobotModel& model);

/// Built-in scene for `seed` with the config's explicit obstacles and
/// waypoints substituted in.
Scenario build_scenario(const RunConfig& config, std::uint64_t seed);

}  // namespace safeik
