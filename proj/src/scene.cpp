#include "safeik/scene.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace safeik {

MotionProfile::MotionProfile(const Vec3& axis, double amplitude, double period, double phase,
                             double speed_cap)
    : axis_(axis), amplitude_(amplitude), period_(period), phase_(phase), speed_cap_(speed_cap) {
  if (std::abs(axis.norm() - 1.0) > 1e-9) throw std::invalid_argument("motion axis must be unit");
  if (!(amplitude >= 0.0)) throw std::invalid_argument("motion amplitude must be nonnegative");
  if (!(period > 0.0)) throw std::invalid_argument("motion period must be positive");
  if (!std::isfinite(phase)) throw std::invalid_argument("motion phase must be finite");
  if (peak_speed() > speed_cap) throw std::invalid_argument("motion peak speed exceeds the cap");
}

double MotionProfile::peak_speed() const {
  return 2.0 * std::numbers::pi * amplitude_ / period_;
}

Vec3 MotionProfile::offset(double t) const {
  return axis_ * (amplitude_ * std::sin(2.0 * std::numbers::pi * t / period_ + phase_));
}

std::vector<Capsule> obstacle_poses_at(const Scene& scene, double t) {
  std::vector<Capsule> out;
  out.reserve(scene.obstacles.size());
  for (const SceneObstacle& o : scene.obstacles) {
    out.push_back(o.motion ? o.base.translated(o.motion->offset(t)) : o.base);
  }
  return out;
}

ReferenceTrajectory::ReferenceTrajectory(std::vector<TrajectorySample> samples)
    : samples_(std::move(samples)) {
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!is_unit(samples_[i].pose.orientation, 1e-9)) {
      throw std::invalid_argument("trajectory sample " + std::to_string(i) +
                                  " has a non-unit quaternion");
    }
    if (i > 0 && !(samples_[i].t > samples_[i - 1].t)) {
      throw std::invalid_argument("trajectory times must strictly increase");
    }
  }
}

double ReferenceTrajectory::duration() const {
  return samples_.empty() ? 0.0 : samples_.back().t - samples_.front().t;
}

Pose ReferenceTrajectory::at(double t) const {
  if (samples_.empty()) throw std::logic_error("empty reference trajectory");
  if (t <= samples_.front().t) return samples_.front().pose;
  if (t >= samples_.back().t) return samples_.back().pose;
  std::size_t i = 1;
  while (samples_[i].t < t) ++i;
  const TrajectorySample& a = samples_[i - 1];
  const TrajectorySample& b = samples_[i];
  const double s = (t - a.t) / (b.t - a.t);
  const double r = s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
  Quat qb = b.pose.orientation;
  if (a.pose.orientation.dot(qb) < 0.0) qb.coeffs() = -qb.coeffs();
  return {a.pose.position + r * (b.pose.position - a.pose.position),
          a.pose.orientation.slerp(r, qb).normalized()};
}

std::string_view to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::dynamic: return "dynamic";
    case SceneKind::shelf: return "shelf";
    case SceneKind::clutter: return "clutter";
    case SceneKind::empty: return "empty";
  }
  return "?";
}

std::optional<SceneKind> parse_scene_kind(std::string_view text) {
  if (text == "dynamic") return SceneKind::dynamic;
  if (text == "shelf") return SceneKind::shelf;
  if (text == "clutter") return SceneKind::clutter;
  if (text == "empty") return SceneKind::empty;
  return std::nullopt;
}

namespace {

constexpr double kPi = std::numbers::pi;

// Tool pointing straight down (tool z along world -z).
Quat tool_down() { return Quat(Eigen::AngleAxisd(kPi, Vec3::UnitY())); }

// Tool pointing forward (tool z along world +x).
Quat tool_forward() { return Quat(Eigen::AngleAxisd(kPi / 2, Vec3::UnitY())); }

Quat tilt(const Quat& base, double about_x, double about_y, double about_tool) {
  return (Quat(Eigen::AngleAxisd(about_x, Vec3::UnitX())) *
          Quat(Eigen::AngleAxisd(about_y, Vec3::UnitY())) * base *
          Quat(Eigen::AngleAxisd(about_tool, Vec3::UnitZ())))
      .normalized();
}

Capsule segment(const Vec3& a, const Vec3& b, double r) { return {a, b, r}; }

// Workspace-center hover with rotational sweeps; shared by the dynamic and
// empty scenes.
ReferenceTrajectory hover_trajectory(std::mt19937_64& rng, double duration) {
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  const Vec3 center(0.55, 0.0, 0.38);
  const double step = 2.0;
  std::vector<TrajectorySample> samples;
  samples.push_back({0.0, {center, tool_down()}});
  const int n = static_cast<int>(std::ceil(duration / step));
  for (int k = 1; k <= n; ++k) {
    const double sx = (k % 2 == 0) ? 1.0 : -1.0;
    const double sy = (k % 4 < 2) ? 1.0 : -1.0;
    const Vec3 p = center + Vec3(0.02 * jitter(rng), 0.02 * jitter(rng), 0.015 * jitter(rng));
    const Quat q = tilt(tool_down(), sx * (0.30 + 0.05 * jitter(rng)),
                        sy * (0.25 + 0.05 * jitter(rng)), 0.4 * jitter(rng));
    samples.push_back({std::min(k * step, duration), {p, q}});
  }
  return ReferenceTrajectory(std::move(samples));
}

Scenario dynamic_scene(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  // Each obstacle touches the arm only near the negative extreme of its
  // swing; phases are drawn so that nothing overlaps the arm at t = 0.
  std::uniform_real_distribution<double> phase(-kPi / 6, 7 * kPi / 6);
  const double amplitude = 0.10;
  const double period = 26.0;  // peak speed 0.0242 m/s

  Scenario s;
  s.scene.name = "dynamic";
  s.scene.seed = seed;
  // All three approach the arm from the +y side, so dodging them is a swivel
  // of the elbow plus a sideways shift of the tool.
  // front-back: short post sweeping past the upper arm
  s.scene.obstacles.push_back({segment({-0.02, 0.09, 0.50}, {-0.02, 0.09, 0.66}, 0.035),
                               MotionProfile(-Vec3::UnitX(), amplitude, period, phase(rng))});
  // left-right: post level with the tool
  s.scene.obstacles.push_back({segment({0.55, 0.17, 0.25}, {0.55, 0.17, 0.40}, 0.03),
                               MotionProfile(Vec3::UnitY(), amplitude, period, phase(rng))});
  // vertical: hanging post beside the forearm
  s.scene.obstacles.push_back({segment({0.38, 0.07, 0.75}, {0.38, 0.07, 0.90}, 0.03),
                               MotionProfile(Vec3::UnitZ(), amplitude, period, phase(rng))});
  s.reference = hover_trajectory(rng, period);
  return s;
}

Scenario empty_scene(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Scenario s;
  s.scene.name = "empty";
  s.scene.seed = seed;
  // consume the same draws as the dynamic scene so the references coincide
  std::uniform_real_distribution<double> phase(-kPi / 6, 7 * kPi / 6);
  for (int i = 0; i < 3; ++i) (void)phase(rng);
  s.reference = hover_trajectory(rng, 26.0);
  return s;
}

// Frame in the plane x = kFrameX with 2 x 2 windows; the tool is inserted
// through each window in turn. Every insertion runs alongside one window edge
// so that the raw reference grazes it.
constexpr double kFrameX = 0.78;
constexpr double kBarRadius = 0.02;
constexpr double kToolRadius = 0.025;

Scenario shelf_scene(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::uniform_real_distribution<double> depth(0.004, 0.010);

  const double y_mid = 0.005 * jitter(rng);
  const double z_mid = 0.60 + 0.005 * jitter(rng);
  const double half = 0.32;
  const double z_lo = z_mid - 0.28, z_hi = z_mid + 0.28;

  Scenario s;
  s.scene.name = "shelf";
  s.scene.seed = seed;
  auto bar = [&](const Vec3& a, const Vec3& b) { s.scene.obstacles.push_back({segment(a, b, kBarRadius), std::nullopt}); };
  // vertical bars
  for (double y : {y_mid - half, y_mid, y_mid + half}) bar({kFrameX, y, z_lo}, {kFrameX, y, z_hi});
  // horizontal bars
  for (double z : {z_lo, z_mid, z_hi}) bar({kFrameX, y_mid - half, z}, {kFrameX, y_mid + half, z});

  // windows in visiting order: (lateral sign, vertical sign)
  const int order[4][2] = {{-1, 1}, {1, 1}, {1, -1}, {-1, -1}};
  const double standoff_x = 0.60, insert_x = kFrameX + 0.04;
  const double graze_clearance = kBarRadius + kToolRadius;

  std::vector<TrajectorySample> samples;
  double t = 0.0;
  auto add = [&](double dt, const Vec3& p, const Quat& q) {
    t += dt;
    samples.push_back({t, {p, q}});
  };
  samples.push_back({0.0, {Vec3(standoff_x, 0.0, z_mid), tool_forward()}});
  for (const auto& w : order) {
    const double cy = y_mid + w[0] * 0.5 * half;
    const double cz = z_mid + w[1] * 0.5 * (z_hi - z_mid);
    const double g = depth(rng);
    // graze the shared middle bar: vertical for even windows, horizontal for odd
    Vec3 in(insert_x, cy, cz);
    const bool vertical_edge = (&w - order) % 2 == 0;
    if (vertical_edge) {
      in.y() = y_mid - w[0] * (graze_clearance - g);
    } else {
      in.z() = z_mid - w[1] * (graze_clearance - g);
    }
    const Quat q = tilt(tool_forward(), 0.25 * jitter(rng), 0.0, 0.3 * jitter(rng));
    Vec3 approach = in;
    approach.x() = standoff_x;
    add(1.6, Vec3(standoff_x, cy, cz), q);
    add(0.8, approach, q);
    add(1.0, in, q);
    add(0.4, in, q);
    add(1.0, approach, q);
  }
  add(1.2, Vec3(standoff_x, 0.0, z_mid), tool_forward());
  s.reference = ReferenceTrajectory(std::move(samples));
  return s;
}

Scenario clutter_scene(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  Scenario s;
  s.scene.name = "clutter";
  s.scene.seed = seed;
  const double table = 0.10;
  // ten static objects between and around the pick area
  const Vec3 spots[10] = {{0.45, -0.30, 0}, {0.55, -0.12, 0}, {0.70, -0.25, 0}, {0.40, 0.05, 0},
                          {0.62, 0.02, 0},  {0.75, 0.12, 0},  {0.48, 0.22, 0},  {0.65, 0.32, 0},
                          {0.35, -0.15, 0}, {0.80, -0.05, 0}};
  for (int i = 0; i < 10; ++i) {
    const Vec3 base = spots[i] + Vec3(0.01 * jitter(rng), 0.01 * jitter(rng), table);
    const double height = 0.10 + 0.08 * (0.5 + 0.5 * jitter(rng));
    s.scene.obstacles.push_back({segment(base, base + Vec3(0, 0, height), 0.03), std::nullopt});
  }
  const Vec3 picks[3] = {{0.52, -0.22, 0}, {0.72, -0.12, 0}, {0.56, 0.12, 0}};
  for (const Vec3& p : picks) {
    s.scene.pick_poses.push_back({p + Vec3(0, 0, table + 0.06), tool_down()});
  }
  s.scene.basket = Pose{Vec3(0.30, 0.40, table + 0.25), tool_down()};

  std::vector<TrajectorySample> samples;
  double t = 0.0;
  const Vec3 lift(0, 0, 0.22);
  samples.push_back({t, {Vec3(0.45, 0.0, 0.45), tool_down()}});
  for (const Pose& pick : s.scene.pick_poses) {
    t += 2.5;
    samples.push_back({t, {pick.position + lift, pick.orientation}});
    t += 1.5;
    samples.push_back({t, pick});
    t += 1.5;
    samples.push_back({t, {pick.position + lift, pick.orientation}});
    t += 2.5;
    samples.push_back({t, *s.scene.basket});
  }
  t += 2.0;
  samples.push_back({t, {Vec3(0.45, 0.0, 0.45), tool_down()}});
  s.reference = ReferenceTrajectory(std::move(samples));
  return s;
}

}  // namespace

Scenario make_scene(SceneKind kind, std::uint64_t seed) {
  switch (kind) {
    case SceneKind::dynamic: return dynamic_scene(seed);
    case SceneKind::shelf: return shelf_scene(seed);
    case SceneKind::clutter: return clutter_scene(seed);
    case SceneKind::empty: return empty_scene(seed);
  }
  throw std::invalid_argument("unknown scene kind");
}

}  // namespace safeik
