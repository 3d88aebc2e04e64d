#include "safeik/robot_model.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "safeik/text_document.hpp"

namespace safeik {
namespace {

void check_dim(const RobotModel& model, const JointVector& q) {
  if (q.size() != model.dof()) {
    throw std::invalid_argument("joint vector has " + std::to_string(q.size()) +
                                " entries, model has " + std::to_string(model.dof()) + " joints");
  }
}

Transform joint_motion(const JointSpec& joint, double value) {
  if (joint.kind == JointKind::revolute) {
    return {Vec3::Zero(), Quat(Eigen::AngleAxisd(value, joint.axis))};
  }
  return Transform::from_translation(joint.axis * value);
}

Transform parse_origin(const TextLine& line, const std::map<std::string, std::vector<double>>& kv) {
  Transform t;
  if (auto it = kv.find("xyz"); it != kv.end()) t.position = Vec3(it->second[0], it->second[1], it->second[2]);
  const bool has_rpy = kv.count("rpy") != 0;
  const bool has_quat = kv.count("quat") != 0;
  if (has_rpy && has_quat) throw ParseError(line.number, "quat", "give either rpy or quat, not both");
  if (has_rpy) {
    const auto& r = kv.at("rpy");
    t.orientation = quat_from_rpy(r[0], r[1], r[2]);
  }
  if (has_quat) {
    const auto& w = kv.at("quat");
    t.orientation = Quat(w[0], w[1], w[2], w[3]);
    if (!is_unit(t.orientation)) throw ParseError(line.number, "quat", "quaternion is not unit-norm");
  }
  return t;
}

std::string vec_str(const Vec3& v) {
  return format_double(v.x()) + " " + format_double(v.y()) + " " + format_double(v.z());
}

std::string origin_str(const Transform& t) {
  const Quat& q = t.orientation;
  return "xyz " + vec_str(t.position) + " quat " + format_double(q.w()) + " " + format_double(q.x()) +
         " " + format_double(q.y()) + " " + format_double(q.z());
}

bool same_transform(const Transform& a, const Transform& b) {
  return a.position == b.position && a.orientation.coeffs() == b.orientation.coeffs();
}

}  // namespace

JointVector RobotModel::lower_limits() const {
  JointVector v(dof());
  for (int i = 0; i < dof(); ++i) v[i] = joints[i].lower;
  return v;
}

JointVector RobotModel::upper_limits() const {
  JointVector v(dof());
  for (int i = 0; i < dof(); ++i) v[i] = joints[i].upper;
  return v;
}

void RobotModel::validate() const {
  if (joints.empty()) throw std::invalid_argument("robot has no joints");
  std::set<std::string> names;
  for (const auto& j : joints) {
    if (!names.insert(j.name).second) throw std::invalid_argument("duplicate joint name '" + j.name + "'");
    if (std::abs(j.axis.norm() - 1.0) >= 1e-9) {
      throw std::invalid_argument("joint '" + j.name + "': non-unit axis");
    }
    if (!(j.lower <= j.upper)) {
      throw std::invalid_argument("joint '" + j.name + "': lower limit exceeds upper limit");
    }
    if (!is_unit(j.parent_offset.orientation)) {
      throw std::invalid_argument("joint '" + j.name + "': origin quaternion is not unit-norm");
    }
  }
  for (std::size_t c = 0; c < colliders.size(); ++c) {
    const auto& col = colliders[c];
    if (!(col.radius > 0.0)) {
      throw std::invalid_argument("collider " + std::to_string(c) + ": nonpositive collider radius");
    }
    if (col.link_index < 0 || col.link_index >= dof()) {
      throw std::invalid_argument("collider " + std::to_string(c) + ": link index out of range");
    }
  }
}

bool operator==(const JointSpec& a, const JointSpec& b) {
  return a.name == b.name && a.kind == b.kind && a.axis == b.axis &&
         same_transform(a.parent_offset, b.parent_offset) && a.lower == b.lower && a.upper == b.upper;
}

bool operator==(const LinkCollider& a, const LinkCollider& b) {
  return a.link_index == b.link_index && a.p0 == b.p0 && a.p1 == b.p1 && a.radius == b.radius;
}

bool operator==(const RobotModel& a, const RobotModel& b) {
  return a.name == b.name && a.joints == b.joints && same_transform(a.base_pose, b.base_pose) &&
         same_transform(a.ee_offset, b.ee_offset) && a.colliders == b.colliders;
}

RobotModel load_robot(std::string_view document) {
  static const std::map<std::string, int> kOriginKeys{{"xyz", 3}, {"rpy", 3}, {"quat", 4}};
  static const std::map<std::string, int> kJointKeys{
      {"axis", 3}, {"xyz", 3}, {"rpy", 3}, {"quat", 4}, {"limits", 2}};
  static const std::map<std::string, int> kColliderKeys{{"p0", 3}, {"p1", 3}, {"radius", 1}};

  RobotModel model;
  bool seen_robot = false;
  for (const TextLine& line : tokenize_document(document)) {
    const std::string& kw = line.keyword();
    if (kw == "robot") {
      if (seen_robot) throw ParseError(line.number, "robot", "more than one robot entry");
      model.name = line.token_at(1, "robot");
      seen_robot = true;
    } else if (kw == "base" || kw == "ee") {
      const auto kv = parse_keyed_numbers(line, 1, kOriginKeys);
      (kw == "base" ? model.base_pose : model.ee_offset) = parse_origin(line, kv);
    } else if (kw == "joint") {
      JointSpec j;
      j.name = line.token_at(1, "name");
      const std::string& kind = line.token_at(2, "kind");
      if (kind == "revolute") {
        j.kind = JointKind::revolute;
      } else if (kind == "prismatic") {
        j.kind = JointKind::prismatic;
      } else {
        throw ParseError(line.number, "kind", "expected revolute or prismatic, got '" + kind + "'");
      }
      const auto kv = parse_keyed_numbers(line, 3, kJointKeys);
      if (!kv.count("axis")) throw ParseError(line.number, "axis", "missing value");
      if (!kv.count("limits")) throw ParseError(line.number, "limits", "missing value");
      const auto& a = kv.at("axis");
      j.axis = Vec3(a[0], a[1], a[2]);
      j.parent_offset = parse_origin(line, kv);
      j.lower = kv.at("limits")[0];
      j.upper = kv.at("limits")[1];
      model.joints.push_back(std::move(j));
    } else if (kw == "collider") {
      LinkCollider c;
      c.link_index = line.integer_at(1, "link");
      const auto kv = parse_keyed_numbers(line, 2, kColliderKeys);
      for (const char* key : {"p0", "p1", "radius"}) {
        if (!kv.count(key)) throw ParseError(line.number, key, "missing value");
      }
      const auto& p0 = kv.at("p0");
      const auto& p1 = kv.at("p1");
      c.p0 = Vec3(p0[0], p0[1], p0[2]);
      c.p1 = Vec3(p1[0], p1[1], p1[2]);
      c.radius = kv.at("radius")[0];
      model.colliders.push_back(c);
    } else {
      throw ParseError(line.number, kw, "unknown entry");
    }
  }
  if (!seen_robot) throw ParseError(0, "robot", "document has no robot entry");
  model.validate();
  return model;
}

RobotModel load_robot_file(const std::string& path) { return load_robot(read_file(path)); }

std::string serialize_robot(const RobotModel& model) {
  std::ostringstream out;
  out << "robot " << model.name << "\n";
  out << "base " << origin_str(model.base_pose) << "\n";
  for (const auto& j : model.joints) {
    out << "joint " << j.name << (j.kind == JointKind::revolute ? " revolute" : " prismatic")
        << " axis " << vec_str(j.axis) << " " << origin_str(j.parent_offset) << " limits "
        << format_double(j.lower) << " " << format_double(j.upper) << "\n";
  }
  out << "ee " << origin_str(model.ee_offset) << "\n";
  for (const auto& c : model.colliders) {
    out << "collider " << c.link_index << " p0 " << vec_str(c.p0) << " p1 " << vec_str(c.p1)
        << " radius " << format_double(c.radius) << "\n";
  }
  return out.str();
}

Kinematics forward_kinematics(const RobotModel& model, const JointVector& q) {
  check_dim(model, q);
  Kinematics kin;
  kin.link_frames.reserve(model.joints.size());
  Transform frame = model.base_pose;
  for (int i = 0; i < model.dof(); ++i) {
    const JointSpec& joint = model.joints[i];
    frame = frame * joint.parent_offset * joint_motion(joint, q[i]);
    kin.link_frames.push_back(frame);
  }
  kin.ee = frame * model.ee_offset;
  return kin;
}

Vec3 joint_axis_world(const RobotModel& model, const Kinematics& kin, int j) {
  return kin.link_frames[j].orientation * model.joints[j].axis;
}

Jacobian geometric_jacobian(const RobotModel& model, const JointVector& q) {
  return geometric_jacobian(model, forward_kinematics(model, q));
}

Jacobian geometric_jacobian(const RobotModel& model, const Kinematics& kin) {
  const int n = model.dof();
  Jacobian jac(6, n);
  const Vec3& pe = kin.ee.position;
  for (int j = 0; j < n; ++j) {
    const Vec3 z = joint_axis_world(model, kin, j);
    if (model.joints[j].kind == JointKind::revolute) {
      jac.col(j) << z.cross(pe - kin.link_frames[j].position), z;
    } else {
      jac.col(j) << z, Vec3::Zero();
    }
  }
  return jac;
}

Eigen::Matrix3Xd point_jacobian(const RobotModel& model, const Kinematics& kin, int link_index,
                                const Vec3& point) {
  const int n = model.dof();
  Eigen::Matrix3Xd jac = Eigen::Matrix3Xd::Zero(3, n);
  for (int j = 0; j <= link_index && j < n; ++j) {
    const Vec3 z = joint_axis_world(model, kin, j);
    if (model.joints[j].kind == JointKind::revolute) {
      jac.col(j) = z.cross(point - kin.link_frames[j].position);
    } else {
      jac.col(j) = z;
    }
  }
  return jac;
}

Jacobian jacobian_derivative(const RobotModel& model, const Kinematics& kin, int j) {
  const int n = model.dof();
  Jacobian d = Jacobian::Zero(6, n);
  const Vec3& pe = kin.ee.position;
  const Vec3 zj = joint_axis_world(model, kin, j);
  const Vec3& pj = kin.link_frames[j].position;
  const bool j_revolute = model.joints[j].kind == JointKind::revolute;
  for (int i = 0; i < n; ++i) {
    const Vec3 zi = joint_axis_world(model, kin, i);
    const Vec3& pi = kin.link_frames[i].position;
    const bool i_revolute = model.joints[i].kind == JointKind::revolute;
    if (j_revolute) {
      if (i_revolute) {
        if (i >= j) {
          d.col(i) << zj.cross(zi.cross(pe - pi)), zj.cross(zi);
        } else {
          d.col(i) << zi.cross(zj.cross(pe - pj)), Vec3::Zero();
        }
      } else if (i > j) {
        d.col(i) << zj.cross(zi), Vec3::Zero();
      }
    } else if (i_revolute && i < j) {
      // translating joint j moves the end effector along zj
      d.col(i) << zi.cross(zj), Vec3::Zero();
    }
  }
  return d;
}

std::vector<Capsule> link_capsules_world(const RobotModel& model, const JointVector& q) {
  return link_capsules_world(model, forward_kinematics(model, q));
}

std::vector<Capsule> link_capsules_world(const RobotModel& model, const Kinematics& kin) {
  std::vector<Capsule> out;
  out.reserve(model.colliders.size());
  for (const auto& c : model.colliders) {
    const Transform& f = kin.link_frames[c.link_index];
    out.push_back({f.apply(c.p0), f.apply(c.p1), c.radius});
  }
  return out;
}

}  // namespace safeik
