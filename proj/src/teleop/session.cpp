#include "safeik/teleop/session.hpp"

#include <charconv>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "safeik/geometry.hpp"
#include "safeik/rollout.hpp"

namespace safeik::teleop {

std::string_view to_string(ReferencePolicy policy) {
  switch (policy) {
    case ReferencePolicy::fixed: return "fixed";
    case ReferencePolicy::waypoints: return "waypoints";
    case ReferencePolicy::nearest_pick: return "nearest_pick";
  }
  return "?";
}

std::optional<ReferencePolicy> parse_reference_policy(std::string_view text) {
  if (text == "fixed") return ReferencePolicy::fixed;
  if (text == "waypoints") return ReferencePolicy::waypoints;
  if (text == "nearest_pick") return ReferencePolicy::nearest_pick;
  return std::nullopt;
}

namespace {

CapsuleView view(const Capsule& c) { return {c.p0, c.p1, c.radius}; }

}  // namespace

Session::Session(RobotModel model, SessionConfig config)
    : model_(std::move(model)), config_(std::move(config)) {
  config_.run.validate();
  // a wall-clock budget would let timing leak into the trajectory
  if (config_.deterministic) config_.run.params.solve.time_budget.reset();
  if (!(config_.stale_after > 0.0)) throw std::invalid_argument("stale_after must be positive");
  load_scene(config_.run.scene, config_.seed);
}

void Session::load_scene(SceneKind kind, std::uint64_t seed) {
  config_.run.scene = kind;
  config_.seed = seed;
  scenario_ = build_scenario(config_.run, seed);
  scene_tick_ = 0;
  episodes_ = 0;
  in_violation_ = false;
  human_.reset();
  human_tick_ = 0;

  const JointVector home = config_.run.home.value_or(default_home(model_));
  const Pose start = config_.policy == ReferencePolicy::fixed && config_.fixed_pose
                         ? *config_.fixed_pose
                         : scenario_.reference.at(0.0);
  const JointVector q0 = initial_configuration(model_, home, start, config_.run.params);
  state_ = SolverState::at_rest(model_, q0, config_.run.dt);

  last_ = describe(q0, obstacle_poses_at(scenario_.scene, 0.0));
  last_.tick = tick_;
  last_.t = 0.0;
  last_.target = start;
  last_.status = "init";
}

Pose Session::reference_target(double t, const std::optional<Pose>& human) const {
  switch (config_.policy) {
    case ReferencePolicy::fixed:
      return config_.fixed_pose ? *config_.fixed_pose : scenario_.reference.at(0.0);
    case ReferencePolicy::waypoints:
      return scenario_.reference.at(t);
    case ReferencePolicy::nearest_pick: {
      std::vector<Pose> candidates = scenario_.scene.pick_poses;
      if (scenario_.scene.basket) candidates.push_back(*scenario_.scene.basket);
      if (candidates.empty()) return scenario_.reference.at(t);
      const Vec3 from = human ? human->position : state_.ee.position;
      const Pose* best = &candidates.front();
      double best_d = std::numeric_limits<double>::infinity();
      for (const Pose& p : candidates) {
        const double d = (p.position - from).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = &p;
        }
      }
      return *best;
    }
  }
  return scenario_.reference.at(t);
}

void Session::apply(const ClientMessage& message) {
  struct Visitor {
    Session& s;
    void operator()(const TargetMsg& m) {
      s.human_ = m.pose;
      s.human_tick_ = s.scene_tick_;
    }
    void operator()(const SetSolverMsg& m) { s.config_.kind = m.kind; }
    void operator()(const SetAlphaMsg& m) {
      ArbitrationParams a = s.config_.run.arbitration;
      a.mode = m.mode;
      if (m.mode == ArbitrationMode::fixed) a.fixed_alpha = *m.value;
      if (m.p) a.slope = *m.p;
      if (m.s) a.scale = *m.s;
      if (m.b) a.bias = *m.b;
      a.validate();
      s.config_.run.arbitration = a;
    }
    void operator()(const SetSceneMsg& m) { s.load_scene(m.kind, m.seed); }
    void operator()(const PauseMsg&) { s.paused_ = true; }
    void operator()(const ResumeMsg&) { s.paused_ = false; }
  };
  std::visit(Visitor{*this}, message);
  last_.solver = config_.kind;
  last_.paused = paused_;
}

StateUpdate Session::describe(const JointVector& q, const std::vector<Capsule>& obstacles) const {
  StateUpdate u;
  u.q.assign(q.data(), q.data() + q.size());
  const Kinematics kin = forward_kinematics(model_, q);
  u.ee = kin.ee;
  const auto links = link_capsules_world(model_, kin);
  for (const Capsule& c : links) u.links.push_back(view(c));
  for (const Capsule& c : obstacles) u.obstacles.push_back(view(c));
  if (const auto prox = min_robot_obstacle_distance(links, obstacles)) {
    u.phi_min = prox->global.phi;
    for (const DistanceWitness& w : prox->per_obstacle) u.phi.push_back(w.phi);
  }
  u.solver = config_.kind;
  u.paused = paused_;
  u.episodes = episodes_;
  return u;
}

StateUpdate Session::tick() {
  ++tick_;
  ++scene_tick_;
  const double dt = config_.run.dt;
  const double t = scene_tick_ * dt;
  const std::vector<Capsule> obstacles = obstacle_poses_at(scenario_.scene, t);

  // The last operator pose is held when input goes quiet; only the flag changes.
  const bool stale =
      human_ && static_cast<double>(scene_tick_ - human_tick_) * dt > config_.stale_after;
  const Pose reference = reference_target(t, human_);
  double alpha = 1.0;
  Pose target = reference;
  if (human_) {
    alpha = arbitration_weight(human_->position, reference.position, config_.run.arbitration);
    target = blend_pose({*human_, reference}, alpha);
  }

  JointVector q_next = state_.q;
  std::string status;
  bool intervention = false;
  double step_ms = 0.0;
  try {
    StepResult step =
        solve_step(config_.kind, state_, target, obstacles, model_, config_.run.params);
    if (!step.q_next.allFinite()) throw std::runtime_error("non-finite joint state");
    q_next = step.q_next;
    status = to_string(step.diagnostics.status);
    intervention = !step.diagnostics.accepted;
    step_ms = step.diagnostics.step_ms;
  } catch (const std::exception&) {
    // Hold the pose and report it; the session must survive a bad step.
    state_ = SolverState::at_rest(model_, state_.q, dt);
    status = "error";
    intervention = true;
  }

  StateUpdate u = describe(q_next, obstacles);
  const bool violating = u.phi_min && *u.phi_min < 0.0;
  if (violating && !in_violation_) ++episodes_;
  in_violation_ = violating;
  u.episodes = episodes_;
  u.tick = tick_;
  u.t = t;
  u.target = target;
  u.alpha = alpha;
  u.status = std::move(status);
  u.intervention = intervention;
  u.stale = stale;
  u.step_ms = config_.deterministic ? 0.0 : step_ms;
  last_ = u;
  return u;
}

MessageScript parse_script(std::string_view text) {
  MessageScript script;
  bool have_end = false;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  auto fail = [&](const std::string& msg) {
    throw std::invalid_argument("script line " + std::to_string(number) + ": " + msg);
  };
  auto parse_count = [&](std::string_view s) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail("bad tick number");
    return v;
  };
  while (std::getline(in, line)) {
    ++number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto space = line.find_first_of(" \t", first);
    const std::string head = line.substr(first, space == std::string::npos ? std::string::npos
                                                                            : space - first);
    std::string rest;
    if (space != std::string::npos) {
      rest = line.substr(space);
      rest.erase(0, rest.find_first_not_of(" \t"));
      while (!rest.empty() && (rest.back() == '\r' || rest.back() == ' ')) rest.pop_back();
    }
    if (head == "end") {
      script.end = parse_count(rest);
      have_end = true;
      continue;
    }
    if (rest.empty()) fail("missing frame");
    const std::uint64_t at = parse_count(head);
    if (!script.entries.empty() && at < script.entries.back().at) fail("ticks must not decrease");
    script.entries.push_back({at, rest});
  }
  if (!have_end) throw std::invalid_argument("script has no end line");
  return script;
}

std::string format_script(const MessageScript& script) {
  std::ostringstream out;
  for (const ScriptEntry& e : script.entries) out << e.at << ' ' << e.frame << '\n';
  out << "end " << script.end << '\n';
  return out.str();
}

std::vector<std::string> replay(Session& session, const MessageScript& script) {
  std::vector<std::string> frames;
  std::size_t next = 0;
  while (session.tick_count() < script.end) {
    bool applied = false;
    while (next < script.entries.size() && script.entries[next].at <= session.tick_count()) {
      const auto parsed = parse_client_message(script.entries[next].frame);
      if (const auto* err = std::get_if<ProtocolError>(&parsed)) {
        frames.push_back(encode_error(*err));
      } else {
        session.apply(std::get<ClientMessage>(parsed));
        applied = true;
      }
      ++next;
    }
    if (!session.paused()) {
      frames.push_back(encode_state(session.tick()));
      continue;
    }
    // Same as the live loop: a paused boundary that changed something re-sends
    // the last state; the tick counter is frozen, so only entries at this
    // boundary can resume.
    if (applied) frames.push_back(encode_state(session.last()));
    if (next == script.entries.size() || script.entries[next].at > session.tick_count()) break;
  }
  return frames;
}

}  // namespace safeik::teleop
