#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "safeik/blending.hpp"
#include "safeik/ik_solver.hpp"
#include "safeik/robot_model.hpp"
#include "safeik/run_config.hpp"
#include "safeik/scene.hpp"
#include "safeik/teleop/protocol.hpp"

namespace safeik::teleop {

/// Scripted stand-in for the autonomy side's target pose.
enum class ReferencePolicy {
  fixed,         // hold `fixed_pose`, or the reference's first pose
  waypoints,     // follow the scene reference on the scene clock
  nearest_pick,  // the pick or basket pose closest to the operator target
};

std::string_view to_string(ReferencePolicy policy);
std::optional<ReferencePolicy> parse_reference_policy(std::string_view text);

struct SessionConfig {
  RunConfig run;  // scene, params, dt, home, arbitration, explicit geometry
  SolverKind kind = SolverKind::B;
  std::uint64_t seed = 1;
  ReferencePolicy policy = ReferencePolicy::waypoints;
  std::optional<Pose> fixed_pose;
  double stale_after = 0.5;  // s of scene time without a target message
  /// Report step_ms as 0 so the state stream depends only on the inputs.
  bool deterministic = false;
};

/// The one authoritative loop state. Time is tick-indexed: nothing here reads
/// the wall clock except the step timer, which deterministic mode discards.
class Session {
 public:
  Session(RobotModel model, SessionConfig config);

  /// Applies a control message. Callers apply messages only between ticks.
  void apply(const ClientMessage& message);

  /// Advances one tick and returns its update. Runs even while paused; the
  /// caller decides whether to tick.
  StateUpdate tick();

  /// The last update, or the initial state before any tick.
  const StateUpdate& last() const { return last_; }

  bool paused() const { return paused_; }
  std::uint64_t tick_count() const { return tick_; }
  double scene_time() const { return scene_tick_ * config_.run.dt; }
  SolverKind kind() const { return config_.kind; }
  const Scenario& scenario() const { return scenario_; }
  const RobotModel& model() const { return model_; }
  const SessionConfig& config() const { return config_; }

 private:
  void load_scene(SceneKind kind, std::uint64_t seed);
  Pose reference_target(double t, const std::optional<Pose>& human) const;
  StateUpdate describe(const JointVector& q, const std::vector<Capsule>& obstacles) const;

  RobotModel model_;
  SessionConfig config_;
  Scenario scenario_;
  SolverState state_;
  std::optional<Pose> human_;
  std::uint64_t human_tick_ = 0;  // scene tick of the last target message
  std::uint64_t tick_ = 0;        // monotonic over the session
  std::uint64_t scene_tick_ = 0;  // restarts with each scene
  int episodes_ = 0;
  bool in_violation_ = false;
  bool paused_ = false;
  StateUpdate last_;
};

/// A recorded message script: each entry is applied at the boundary before
/// tick `at` (the session's tick counter), in file order. Text format, one
/// entry per line: `<at> <json frame>`, plus one `end <ticks>` line; `#`
/// starts a comment.
struct ScriptEntry {
  std::uint64_t at = 0;
  std::string frame;
};

struct MessageScript {
  std::vector<ScriptEntry> entries;
  std::uint64_t end = 0;
};

MessageScript parse_script(std::string_view text);
std::string format_script(const MessageScript& script);

/// Feeds the script through a session exactly as the live loop would and
/// returns every outgoing frame: one state frame per tick, the last state
/// again when a paused boundary applied messages, and an error frame for each
/// rejected message. Stops at `end` ticks or when paused with no messages left
/// at the current boundary.
std::vector<std::string> replay(Session& session, const MessageScript& script);

}  // namespace safeik::teleop
