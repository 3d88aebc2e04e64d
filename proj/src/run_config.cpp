#include "safeik/run_config.hpp"

#include <filesystem>

#include "safeik/text_document.hpp"

namespace safeik {

namespace {

Quat quat_from(const std::vector<double>& v) { return Quat(v[0], v[1], v[2], v[3]); }

TrajectorySample parse_sample(const TextLine& line) {
  const auto kv = parse_keyed_numbers(line, 1, {{"t", 1}, {"xyz", 3}, {"quat", 4}});
  for (const char* key : {"t", "xyz", "quat"}) {
    if (!kv.count(key)) throw ParseError(line.number, key, "missing");
  }
  const auto& p = kv.at("xyz");
  Quat q = quat_from(kv.at("quat"));
  if (std::abs(q.norm() - 1.0) > 1e-6) throw ParseError(line.number, "quat", "not unit norm");
  q.normalize();
  return {kv.at("t")[0], {Vec3(p[0], p[1], p[2]), q}};
}

SceneObstacle parse_obstacle(const TextLine& line) {
  const auto kv = parse_keyed_numbers(line, 1,
                                      {{"p0", 3}, {"p1", 3}, {"radius", 1}, {"axis", 3},
                                       {"amplitude", 1}, {"period", 1}, {"phase", 1},
                                       {"speed_cap", 1}});
  for (const char* key : {"p0", "p1", "radius"}) {
    if (!kv.count(key)) throw ParseError(line.number, key, "missing");
  }
  const auto& a = kv.at("p0");
  const auto& b = kv.at("p1");
  SceneObstacle o;
  o.base = {Vec3(a[0], a[1], a[2]), Vec3(b[0], b[1], b[2]), kv.at("radius")[0]};
  if (!(o.base.radius > 0.0)) throw ParseError(line.number, "radius", "must be positive");
  if (kv.count("axis")) {
    for (const char* key : {"amplitude", "period"}) {
      if (!kv.count(key)) throw ParseError(line.number, key, "missing for moving obstacle");
    }
    const auto& ax = kv.at("axis");
    Vec3 axis(ax[0], ax[1], ax[2]);
    if (!(axis.norm() > 0.0)) throw ParseError(line.number, "axis", "zero vector");
    try {
      o.motion.emplace(axis.normalized(), kv.at("amplitude")[0], kv.at("period")[0],
                       kv.count("phase") ? kv.at("phase")[0] : 0.0,
                       kv.count("speed_cap") ? kv.at("speed_cap")[0] : kDefaultSpeedCap);
    } catch (const std::invalid_argument& e) {
      throw ParseError(line.number, "axis", e.what());
    }
  }
  return o;
}

void set_from(const std::map<std::string, std::vector<double>>& kv, const char* key, double& out) {
  if (const auto it = kv.find(key); it != kv.end()) out = it->second[0];
}

}  // namespace

void RunConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (duration && !(*duration > 0.0)) throw std::invalid_argument("duration must be positive");
  params.validate();
  arbitration.validate();
}

RunConfig parse_run_config(std::string_view text, const std::string& base_dir) {
  RunConfig cfg;
  std::vector<TrajectorySample> waypoints, human;
  for (const TextLine& line : tokenize_document(text)) {
    const std::string& kw = line.keyword();
    if (kw == "robot") {
      std::filesystem::path p(line.token_at(1, "robot"));
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      cfg.robot_path = p.lexically_normal().string();
    } else if (kw == "scene") {
      const auto kind = parse_scene_kind(line.token_at(1, "scene"));
      if (!kind) throw ParseError(line.number, "scene", "unknown scene kind");
      cfg.scene = *kind;
    } else if (kw == "dt") {
      cfg.dt = line.number_at(1, "dt");
      if (!(cfg.dt > 0.0)) throw ParseError(line.number, "dt", "must be positive");
    } else if (kw == "duration") {
      cfg.duration = line.number_at(1, "duration");
      if (!(*cfg.duration > 0.0)) throw ParseError(line.number, "duration", "must be positive");
    } else if (kw == "first_seed") {
      const int s = line.integer_at(1, "first_seed");
      if (s < 0) throw ParseError(line.number, "first_seed", "must be nonnegative");
      cfg.first_seed = static_cast<std::uint64_t>(s);
    } else if (kw == "home") {
      JointVector q(static_cast<int>(line.tokens.size()) - 1);
      for (int i = 0; i < q.size(); ++i) q[i] = line.number_at(1 + i, "home");
      cfg.home = q;
    } else if (kw == "weights") {
      auto& w = cfg.params.weights;
      const auto kv = parse_keyed_numbers(line, 1,
                                          {{"track_pos", 1}, {"track_ori", 1}, {"vel", 1},
                                           {"acc", 1}, {"jerk", 1}, {"cart_vel", 1},
                                           {"selfcol", 1}, {"col", 1}});
      set_from(kv, "track_pos", w.w_track_pos);
      set_from(kv, "track_ori", w.w_track_ori);
      set_from(kv, "vel", w.w_vel);
      set_from(kv, "acc", w.w_acc);
      set_from(kv, "jerk", w.w_jerk);
      set_from(kv, "cart_vel", w.w_cart_vel);
      set_from(kv, "selfcol", w.w_selfcol);
      set_from(kv, "col", w.w_col);
    } else if (kw == "cbf") {
      auto& c = cfg.params.cbf;
      const auto kv = parse_keyed_numbers(
          line, 1, {{"epsilon", 1}, {"gamma", 1}, {"beta", 1}, {"temperature", 1}});
      set_from(kv, "epsilon", c.epsilon);
      set_from(kv, "gamma", c.gamma);
      set_from(kv, "beta", c.beta);
      set_from(kv, "temperature", c.temperature);
    } else if (kw == "penalty") {
      auto& p = cfg.params.penalty;
      const auto kv = parse_keyed_numbers(line, 1, {{"epsilon", 1}, {"delta", 1}});
      set_from(kv, "epsilon", p.epsilon);
      set_from(kv, "delta", p.delta);
    } else if (kw == "manipulability") {
      auto& m = cfg.params.manipulability;
      const auto kv =
          parse_keyed_numbers(line, 1, {{"threshold", 1}, {"cap", 1}, {"temperature", 1}});
      set_from(kv, "threshold", m.sigma_min_threshold);
      set_from(kv, "cap", m.condition_number_cap);
      set_from(kv, "temperature", m.softmax_temperature);
    } else if (kw == "self_collision") {
      auto& s = cfg.params.self_collision;
      const auto kv = parse_keyed_numbers(line, 1, {{"delta", 1}, {"separation", 1}});
      set_from(kv, "delta", s.delta);
      if (kv.count("separation")) s.min_link_separation = static_cast<int>(kv.at("separation")[0]);
    } else if (kw == "solve") {
      auto& s = cfg.params.solve;
      const auto kv = parse_keyed_numbers(line, 1,
                                          {{"max_iterations", 1}, {"tolerance", 1}, {"kkt", 1},
                                           {"step_tolerance", 1}, {"time_budget", 1}});
      if (kv.count("max_iterations")) s.max_iterations = static_cast<int>(kv.at("max_iterations")[0]);
      set_from(kv, "tolerance", s.constraint_tolerance);
      set_from(kv, "kkt", s.objective_tolerance);
      set_from(kv, "step_tolerance", s.step_tolerance);
      if (kv.count("time_budget")) s.time_budget = kv.at("time_budget")[0];
    } else if (kw == "model_hessian") {
      const std::string& v = line.token_at(1, "model_hessian");
      if (v != "on" && v != "off") throw ParseError(line.number, "model_hessian", "expected on|off");
      cfg.params.model_hessian = v == "on";
    } else if (kw == "obstacle") {
      cfg.obstacles.push_back(parse_obstacle(line));
    } else if (kw == "waypoint") {
      waypoints.push_back(parse_sample(line));
    } else if (kw == "human") {
      human.push_back(parse_sample(line));
    } else if (kw == "arbitration") {
      auto& a = cfg.arbitration;
      const std::string& mode = line.token_at(1, "arbitration");
      if (mode == "fixed") {
        a.mode = ArbitrationMode::fixed;
        a.fixed_alpha = line.number_at(2, "alpha");
        if (line.tokens.size() > 3) throw ParseError(line.number, "arbitration", "trailing tokens");
      } else if (mode == "sigmoid") {
        a.mode = ArbitrationMode::sigmoid;
        const auto kv = parse_keyed_numbers(line, 2, {{"slope", 1}, {"scale", 1}, {"bias", 1}});
        set_from(kv, "slope", a.slope);
        set_from(kv, "scale", a.scale);
        set_from(kv, "bias", a.bias);
      } else {
        throw ParseError(line.number, "arbitration", "expected fixed|sigmoid");
      }
    } else {
      throw ParseError(line.number, kw, "unknown keyword");
    }
  }
  try {
    if (!waypoints.empty()) cfg.waypoints = ReferenceTrajectory(waypoints).samples();
    if (!human.empty()) cfg.human_waypoints = ReferenceTrajectory(human).samples();
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(0, "config", e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  const std::filesystem::path p(path);
  return parse_run_config(read_file(path), p.parent_path().empty() ? "." : p.parent_path().string());
}

JointVector default_home(const RobotModel& model) {
  JointVector q = JointVector::Zero(model.dof());
  if (model.dof() == 7) q << 0.0, 0.3, 0.0, -1.8, 0.0, -0.6, 0.0;
  return q;
}

Scenario build_scenario(const RunConfig& config, std::uint64_t seed) {
  Scenario s = make_scene(config.scene, seed);
  if (!config.obstacles.empty()) {
    s.scene.obstacles = config.obstacles;
    s.scene.name += "+custom";
  }
  if (!config.waypoints.empty()) s.reference = ReferenceTrajectory(config.waypoints);
  return s;
}

}  // namespace safeik
