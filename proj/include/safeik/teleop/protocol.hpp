#pragma once

// Wire protocol: one UTF-8 JSON object per WebSocket message,
// {"v": 1, "type": ..., "payload": {...}}. Quaternions are [w, x, y, z].

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "safeik/blending.hpp"
#include "safeik/capsule.hpp"
#include "safeik/ik_solver.hpp"
#include "safeik/scene.hpp"

namespace safeik::teleop {

inline constexpr int kProtocolVersion = 1;

struct TargetMsg {
  Pose pose;
};
struct SetSolverMsg {
  SolverKind kind = SolverKind::B;
};
struct SetAlphaMsg {
  ArbitrationMode mode = ArbitrationMode::fixed;
  std::optional<double> value;  // fixed
  std::optional<double> p, s, b;  // sigmoid slope, scale, bias
};
struct SetSceneMsg {
  SceneKind kind = SceneKind::clutter;
  std::uint64_t seed = 1;
};
struct PauseMsg {};
struct ResumeMsg {};

using ClientMessage =
    std::variant<TargetMsg, SetSolverMsg, SetAlphaMsg, SetSceneMsg, PauseMsg, ResumeMsg>;

struct ProtocolError {
  std::string code;  // bad_json, version, bad_type, bad_payload, not_controller
  std::string msg;
};

/// Never throws; malformed input yields a ProtocolError.
std::variant<ClientMessage, ProtocolError> parse_client_message(std::string_view frame);
std::string encode_client_message(const ClientMessage& message);

struct CapsuleView {
  Vec3 p0, p1;
  double r = 0.0;
};

struct StateUpdate {
  std::uint64_t tick = 0;
  double t = 0.0;
  std::vector<double> q;
  Pose ee;
  Pose target;
  double alpha = 1.0;
  std::vector<double> phi;
  std::optional<double> phi_min;
  SolverKind solver = SolverKind::B;
  std::string status;
  bool intervention = false;  // the step was rejected and the pose held
  bool stale = false;         // operator input older than the stale limit
  bool paused = false;
  int episodes = 0;
  double step_ms = 0.0;
  int dropped = 0;  // frames this client missed because it fell behind
  std::vector<CapsuleView> obstacles;
  std::vector<CapsuleView> links;
};

std::string encode_state(const StateUpdate& state);
/// Inverse of encode_state, used by clients and tests. Throws on bad input.
StateUpdate decode_state(std::string_view frame);
std::string encode_error(const ProtocolError& error);
/// Sent once on connect: {"role": "controller" | "observer"}.
std::string encode_welcome(bool controller);

}  // namespace safeik::teleop
