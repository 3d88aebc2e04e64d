#include <doctest.h>

#include <cmath>
#include <numbers>

#include "safeik/rollout.hpp"
#include "safeik/scene.hpp"

using namespace safeik;

namespace {

RobotModel bundled_arm() { return load_robot_file(std::string(SAFEIK_DATA_DIR) + "/arm7.robot"); }

bool same_capsules(const std::vector<Capsule>& a, const std::vector<Capsule>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].p0 != b[i].p0 || a[i].p1 != b[i].p1 || a[i].radius != b[i].radius) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("MotionProfile: validation and the speed cap") {
  CHECK_THROWS_AS(MotionProfile(Vec3(1, 1, 0), 0.1, 30.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(MotionProfile(Vec3::UnitX(), -0.1, 30.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(MotionProfile(Vec3::UnitX(), 0.1, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(MotionProfile(Vec3::UnitX(), 0.1, 30.0, NAN), std::invalid_argument);
  // 2 pi 0.1 / 20 = 0.0314 m/s
  CHECK_THROWS_AS(MotionProfile(Vec3::UnitX(), 0.1, 20.0, 0.0), std::invalid_argument);
  const MotionProfile m(Vec3::UnitX(), 0.1, 26.0, 0.0);
  CHECK(m.peak_speed() <= kDefaultSpeedCap);
}

TEST_CASE("obstacle_poses_at: rest pose and quarter period") {
  Scene s;
  const Capsule base{Vec3(0.1, 0.2, 0.3), Vec3(0.1, 0.2, 0.5), 0.03};
  s.obstacles.push_back({base, MotionProfile(Vec3::UnitY(), 0.08, 24.0, 0.0)});
  s.obstacles.push_back({base, std::nullopt});
  const auto at0 = obstacle_poses_at(s, 0.0);
  CHECK(at0[0].p0 == base.p0);
  CHECK(at0[1].p1 == base.p1);
  const auto quarter = obstacle_poses_at(s, 6.0);
  CHECK((quarter[0].p0 - base.p0 - Vec3(0, 0.08, 0)).norm() < 1e-15);
  CHECK(quarter[1].p0 == base.p0);
}

TEST_CASE("dynamic scene: three orthogonal movers under the speed cap on every seed") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Scenario sc = make_scene(SceneKind::dynamic, seed);
    REQUIRE(sc.scene.obstacles.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      REQUIRE(sc.scene.obstacles[i].motion);
      for (std::size_t j = i + 1; j < 3; ++j) {
        CHECK(std::abs(sc.scene.obstacles[i].motion->axis().dot(sc.scene.obstacles[j].motion->axis())) <
              1e-12);
      }
    }
    // dense sampling over one full period of the slowest mover
    double period = 0.0;
    for (const auto& o : sc.scene.obstacles) period = std::max(period, o.motion->period());
    const double dt = 1e-3;
    double fastest = 0.0;
    auto prev = obstacle_poses_at(sc.scene, 0.0);
    for (double t = dt; t <= period; t += dt) {
      const auto now = obstacle_poses_at(sc.scene, t);
      for (std::size_t i = 0; i < now.size(); ++i) {
        fastest = std::max(fastest, (now[i].p0 - prev[i].p0).norm() / dt);
      }
      prev = now;
    }
    CHECK(fastest <= 0.025 + 1e-6);
  }
}

TEST_CASE("same seed, same scene; different seed, different phases") {
  for (SceneKind k : {SceneKind::dynamic, SceneKind::shelf, SceneKind::clutter, SceneKind::empty}) {
    const Scenario a = make_scene(k, 4), b = make_scene(k, 4);
    CHECK(same_capsules(obstacle_poses_at(a.scene, 3.3), obstacle_poses_at(b.scene, 3.3)));
    REQUIRE(a.reference.samples().size() == b.reference.samples().size());
    for (double t = 0.0; t < a.reference.duration(); t += 0.37) {
      const Pose pa = a.reference.at(t), pb = b.reference.at(t);
      CHECK(pa.position == pb.position);
      CHECK(pa.orientation.coeffs() == pb.orientation.coeffs());
    }
  }
  const Scenario a = make_scene(SceneKind::dynamic, 1), b = make_scene(SceneKind::dynamic, 2);
  CHECK(a.scene.obstacles[0].motion->phase() != b.scene.obstacles[0].motion->phase());
}

TEST_CASE("empty scene shares the dynamic reference") {
  const Scenario d = make_scene(SceneKind::dynamic, 3), e = make_scene(SceneKind::empty, 3);
  CHECK(e.scene.obstacles.empty());
  for (double t = 0.0; t < d.reference.duration(); t += 0.5) {
    CHECK(d.reference.at(t).position == e.reference.at(t).position);
  }
}

TEST_CASE("shelf scene: four windows and a grazing reference") {
  const RobotModel arm = bundled_arm();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Scenario sc = make_scene(SceneKind::shelf, seed);
    // three vertical and three horizontal bars bound a 2 x 2 grid
    REQUIRE(sc.scene.obstacles.size() == 6);
    for (const auto& o : sc.scene.obstacles) CHECK_FALSE(o.motion);
    const double c = reference_clearance(arm, sc, 1.0 / 90.0);
    CHECK(c < 0.0);
    CHECK(c >= -0.01);
  }
}

TEST_CASE("clutter scene: ten posts, three picks and a basket") {
  const Scenario sc = make_scene(SceneKind::clutter, 1);
  CHECK(sc.scene.obstacles.size() == 10);
  CHECK(sc.scene.pick_poses.size() == 3);
  CHECK(sc.scene.basket);
  for (const Pose& p : sc.scene.pick_poses) CHECK(is_unit(p.orientation));
}

TEST_CASE("ReferenceTrajectory: waypoints, rest at knots, clamping, validation") {
  const Quat q0 = Quat::Identity();
  const Quat q1(Eigen::AngleAxisd(1.0, Vec3::UnitZ()));
  const ReferenceTrajectory r({{0.0, {Vec3(0, 0, 0), q0}}, {2.0, {Vec3(1, 0, 0), q1}}});
  CHECK(r.duration() == 2.0);
  CHECK(r.at(-1.0).position == Vec3(0, 0, 0));
  CHECK(r.at(5.0).position == Vec3(1, 0, 0));
  CHECK(r.at(1.0).position.x() == doctest::Approx(0.5));
  CHECK(angular_distance(r.at(1.0).orientation, q0) == doctest::Approx(0.5));
  // zero velocity at the knots
  CHECK((r.at(1e-4).position - r.at(0.0).position).norm() < 1e-9);

  CHECK_THROWS_AS(ReferenceTrajectory({{1.0, {}}, {1.0, {}}}), std::invalid_argument);
  Pose bad;
  bad.orientation.coeffs() << 0.0, 0.0, 0.0, 2.0;
  CHECK_THROWS_AS(ReferenceTrajectory({{0.0, bad}}), std::invalid_argument);
}

TEST_CASE("scene kinds parse and print") {
  for (SceneKind k : {SceneKind::dynamic, SceneKind::shelf, SceneKind::clutter, SceneKind::empty}) {
    CHECK(parse_scene_kind(to_string(k)) == k);
  }
  CHECK_FALSE(parse_scene_kind("kitchen"));
}
