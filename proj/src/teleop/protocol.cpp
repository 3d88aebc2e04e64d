#include "safeik/teleop/protocol.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace safeik::teleop {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

struct Reject {
  std::string code;
  std::string msg;
};

const json& field(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw Reject{"bad_payload", std::string("missing field '") + key + "'"};
  return *it;
}

double finite_number(const json& v, const char* what) {
  if (!v.is_number()) throw Reject{"bad_payload", std::string(what) + " must be a number"};
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw Reject{"bad_payload", std::string(what) + " must be finite"};
  return x;
}

std::vector<double> number_array(const json& v, std::size_t n, const char* what) {
  if (!v.is_array() || v.size() != n) {
    throw Reject{"bad_payload", std::string(what) + " must be an array of " + std::to_string(n)};
  }
  std::vector<double> out;
  for (const json& x : v) out.push_back(finite_number(x, what));
  return out;
}

std::optional<double> optional_number(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return finite_number(*it, key);
}

std::string string_field(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (!v.is_string()) throw Reject{"bad_payload", std::string(key) + " must be a string"};
  return v.get<std::string>();
}

TargetMsg parse_target(const json& p) {
  const auto pos = number_array(field(p, "pos"), 3, "pos");
  const auto q = number_array(field(p, "quat"), 4, "quat");
  Quat quat(q[0], q[1], q[2], q[3]);
  if (std::abs(quat.norm() - 1.0) > 1e-3) throw Reject{"bad_payload", "quat is not unit norm"};
  quat.normalize();
  return {{Vec3(pos[0], pos[1], pos[2]), quat}};
}

SetAlphaMsg parse_alpha(const json& p) {
  SetAlphaMsg m;
  const std::string mode = string_field(p, "mode");
  m.value = optional_number(p, "value");
  m.p = optional_number(p, "p");
  m.s = optional_number(p, "s");
  m.b = optional_number(p, "b");
  if (mode == "fixed") {
    m.mode = ArbitrationMode::fixed;
    if (!m.value) throw Reject{"bad_payload", "fixed mode needs value"};
    if (*m.value < 0.0 || *m.value > 1.0) throw Reject{"bad_payload", "value must lie in [0, 1]"};
  } else if (mode == "sigmoid") {
    m.mode = ArbitrationMode::sigmoid;
    if (m.s && !(*m.s > 0.0)) throw Reject{"bad_payload", "s must be positive"};
  } else {
    throw Reject{"bad_payload", "mode must be fixed or sigmoid"};
  }
  return m;
}

SetSceneMsg parse_scene(const json& p) {
  SetSceneMsg m;
  const auto kind = parse_scene_kind(string_field(p, "kind"));
  if (!kind) throw Reject{"bad_payload", "unknown scene kind"};
  m.kind = *kind;
  const json& seed = field(p, "seed");
  if (!seed.is_number_integer() || seed.get<std::int64_t>() < 0) {
    throw Reject{"bad_payload", "seed must be a nonnegative integer"};
  }
  m.seed = seed.get<std::uint64_t>();
  return m;
}

ojson vec_json(const Vec3& v) { return ojson::array({v.x(), v.y(), v.z()}); }
ojson quat_json(const Quat& q) { return ojson::array({q.w(), q.x(), q.y(), q.z()}); }
ojson pose_json(const Pose& p) {
  return ojson{{"pos", vec_json(p.position)}, {"quat", quat_json(p.orientation)}};
}
ojson capsules_json(const std::vector<CapsuleView>& caps) {
  ojson out = ojson::array();
  for (const CapsuleView& c : caps) {
    out.push_back(ojson{{"p0", vec_json(c.p0)}, {"p1", vec_json(c.p1)}, {"r", c.r}});
  }
  return out;
}

ojson envelope(const char* type, ojson payload) {
  return ojson{{"v", kProtocolVersion}, {"type", type}, {"payload", std::move(payload)}};
}

Vec3 vec_from(const json& v) {
  return Vec3(v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>());
}
Pose pose_from(const json& v) {
  const json& q = v.at("quat");
  return {vec_from(v.at("pos")),
          Quat(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
               q.at(3).get<double>())};
}
std::vector<CapsuleView> capsules_from(const json& v) {
  std::vector<CapsuleView> out;
  for (const json& c : v) out.push_back({vec_from(c.at("p0")), vec_from(c.at("p1")), c.at("r")});
  return out;
}

}  // namespace

std::variant<ClientMessage, ProtocolError> parse_client_message(std::string_view frame) {
  const json doc = json::parse(frame, nullptr, false);
  if (doc.is_discarded()) return ProtocolError{"bad_json", "frame is not valid JSON"};
  try {
    if (!doc.is_object()) throw Reject{"bad_json", "frame must be a JSON object"};
    const json& v = field(doc, "v");
    if (!v.is_number_integer() || v.get<std::int64_t>() != kProtocolVersion) {
      throw Reject{"version", "unsupported protocol version, expected 1"};
    }
    const std::string type = string_field(doc, "type");
    static const json empty = json::object();
    const auto it = doc.find("payload");
    const json& payload = it == doc.end() || it->is_null() ? empty : *it;
    if (!payload.is_object()) throw Reject{"bad_payload", "payload must be an object"};

    if (type == "target") return ClientMessage{parse_target(payload)};
    if (type == "set_solver") {
      const auto kind = parse_solver_kind(string_field(payload, "kind"));
      if (!kind) throw Reject{"bad_payload", "kind must be N, P or B"};
      return ClientMessage{SetSolverMsg{*kind}};
    }
    if (type == "set_alpha") return ClientMessage{parse_alpha(payload)};
    if (type == "set_scene") return ClientMessage{parse_scene(payload)};
    if (type == "pause") return ClientMessage{PauseMsg{}};
    if (type == "resume") return ClientMessage{ResumeMsg{}};
    throw Reject{"bad_type", "unknown message type '" + type + "'"};
  } catch (const Reject& r) {
    return ProtocolError{r.code, r.msg};
  } catch (const json::exception& e) {
    return ProtocolError{"bad_payload", e.what()};
  }
}

std::string encode_client_message(const ClientMessage& message) {
  struct Visitor {
    ojson operator()(const TargetMsg& m) const { return envelope("target", pose_json(m.pose)); }
    ojson operator()(const SetSolverMsg& m) const {
      return envelope("set_solver", ojson{{"kind", std::string(to_string(m.kind))}});
    }
    ojson operator()(const SetAlphaMsg& m) const {
      ojson p{{"mode", m.mode == ArbitrationMode::fixed ? "fixed" : "sigmoid"}};
      if (m.value) p["value"] = *m.value;
      if (m.p) p["p"] = *m.p;
      if (m.s) p["s"] = *m.s;
      if (m.b) p["b"] = *m.b;
      return envelope("set_alpha", p);
    }
    ojson operator()(const SetSceneMsg& m) const {
      return envelope("set_scene", ojson{{"kind", std::string(to_string(m.kind))}, {"seed", m.seed}});
    }
    ojson operator()(const PauseMsg&) const { return envelope("pause", ojson::object()); }
    ojson operator()(const ResumeMsg&) const { return envelope("resume", ojson::object()); }
  };
  return std::visit(Visitor{}, message).dump();
}

std::string encode_state(const StateUpdate& s) {
  ojson p;
  p["tick"] = s.tick;
  p["t"] = s.t;
  p["q"] = s.q;
  p["ee"] = pose_json(s.ee);
  p["target"] = pose_json(s.target);
  p["alpha"] = s.alpha;
  p["phi"] = s.phi;
  p["phi_min"] = s.phi_min ? ojson(*s.phi_min) : ojson(nullptr);
  p["solver"] = std::string(to_string(s.solver));
  p["status"] = s.status;
  p["intervention"] = s.intervention;
  p["stale"] = s.stale;
  p["paused"] = s.paused;
  p["episodes"] = s.episodes;
  p["step_ms"] = s.step_ms;
  p["dropped"] = s.dropped;
  p["obstacles"] = capsules_json(s.obstacles);
  p["links"] = capsules_json(s.links);
  return envelope("state", std::move(p)).dump();
}

StateUpdate decode_state(std::string_view frame) {
  const json doc = json::parse(frame);
  if (doc.at("v") != kProtocolVersion || doc.at("type") != "state") {
    throw std::invalid_argument("not a v1 state frame");
  }
  const json& p = doc.at("payload");
  StateUpdate s;
  s.tick = p.at("tick").get<std::uint64_t>();
  s.t = p.at("t");
  s.q = p.at("q").get<std::vector<double>>();
  s.ee = pose_from(p.at("ee"));
  s.target = pose_from(p.at("target"));
  s.alpha = p.at("alpha");
  s.phi = p.at("phi").get<std::vector<double>>();
  if (!p.at("phi_min").is_null()) s.phi_min = p.at("phi_min").get<double>();
  const auto kind = parse_solver_kind(p.at("solver").get<std::string>());
  if (!kind) throw std::invalid_argument("bad solver kind");
  s.solver = *kind;
  s.status = p.at("status");
  s.intervention = p.at("intervention");
  s.stale = p.at("stale");
  s.paused = p.at("paused");
  s.episodes = p.at("episodes");
  s.step_ms = p.at("step_ms");
  s.dropped = p.at("dropped");
  s.obstacles = capsules_from(p.at("obstacles"));
  s.links = capsules_from(p.at("links"));
  return s;
}

std::string encode_error(const ProtocolError& error) {
  return envelope("error", ojson{{"code", error.code}, {"msg", error.msg}}).dump();
}

std::string encode_welcome(bool controller) {
  return envelope("welcome", ojson{{"role", controller ? "controller" : "observer"}}).dump();
}

}  // namespace safeik::teleop
