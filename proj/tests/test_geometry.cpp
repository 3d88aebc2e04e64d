#include <doctest.h>

#include <cmath>
#include <random>

#include "safeik/geometry.hpp"

using namespace safeik;

namespace {

Vec3 random_point(std::mt19937_64& rng, double half = 1.0) {
  std::uniform_real_distribution<double> u(-half, half);
  return {u(rng), u(rng), u(rng)};
}

// Brute force over an (n+1)x(n+1) parameter grid.
double grid_distance(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1, int n) {
  double best = INFINITY;
  for (int i = 0; i <= n; ++i) {
    const Vec3 pa = a0 + (double(i) / n) * (a1 - a0);
    for (int j = 0; j <= n; ++j) {
      const Vec3 pb = b0 + (double(j) / n) * (b1 - b0);
      best = std::min(best, (pa - pb).squaredNorm());
    }
  }
  return std::sqrt(best);
}

// Local refinement: distance from a(s) to segment b is convex in s, so a
// golden-section search on s with an exact point-segment projection converges
// to the global minimum.
double point_segment(const Vec3& p, const Vec3& b0, const Vec3& b1) {
  const Vec3 d = b1 - b0;
  const double len2 = d.squaredNorm();
  double t = len2 > 0.0 ? (p - b0).dot(d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (b0 + t * d)).norm();
}

double refined_distance(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  auto f = [&](double s) { return point_segment(a0 + s * (a1 - a0), b0, b1); };
  double lo = 0.0, hi = 1.0;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int k = 0; k < 200 && hi - lo > 1e-15; ++k) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = f(x2);
    }
  }
  return std::min({f(lo), f(hi), f(0.5 * (lo + hi)), f(0.0), f(1.0)});
}

RobotModel bundled_arm() { return load_robot_file(std::string(SAFEIK_DATA_DIR) + "/arm7.robot"); }

}  // namespace

TEST_CASE("segment_closest_points: hand examples") {
  auto r = segment_closest_points({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0});
  CHECK(r.dist == doctest::Approx(1.0).epsilon(1e-15));
  r = segment_closest_points({0, 0, 0}, {0, 0, 0}, {3, 4, 0}, {3, 4, 0});
  CHECK(r.dist == 5.0);
  r = segment_closest_points({-1, 0, 0}, {1, 0, 0}, {0, -1, 1}, {0, 1, 1});
  CHECK(r.dist == doctest::Approx(1.0));
  CHECK(r.s == doctest::Approx(0.5));
  CHECK(r.t == doctest::Approx(0.5));
  // point against segment interior
  r = segment_closest_points({0.25, 2, 0}, {0.25, 2, 0}, {0, 0, 0}, {1, 0, 0});
  CHECK(r.dist == doctest::Approx(2.0));
  CHECK(r.t == doctest::Approx(0.25));
}

TEST_CASE("segment_closest_points: dense grid oracle on skew pairs") {
  std::mt19937_64 rng(20240);
  for (int trial = 0; trial < 25; ++trial) {
    const Vec3 a0 = random_point(rng), a1 = random_point(rng);
    const Vec3 b0 = random_point(rng), b1 = random_point(rng);
    const auto r = segment_closest_points(a0, a1, b0, b1);
    CHECK(std::abs(r.dist - grid_distance(a0, a1, b0, b1, 2000)) < 1e-3);
  }
}

TEST_CASE("segment_closest_points: 1000 pairs against refined oracle") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec3 a0 = random_point(rng), a1 = random_point(rng);
    const Vec3 b0 = random_point(rng), b1 = random_point(rng);
    const auto r = segment_closest_points(a0, a1, b0, b1);
    REQUIRE(r.s >= 0.0);
    REQUIRE(r.s <= 1.0);
    REQUIRE(r.t >= 0.0);
    REQUIRE(r.t <= 1.0);
    const Vec3 pa = a0 + r.s * (a1 - a0), pb = b0 + r.t * (b1 - b0);
    CHECK(std::abs((pa - pb).norm() - r.dist) < 1e-12);
    CHECK(std::abs(r.dist - refined_distance(a0, a1, b0, b1)) < 1e-9);
  }
}

TEST_CASE("segment_closest_points: parallel and degenerate inputs") {
  // overlapping collinear segments
  auto r = segment_closest_points({0, 0, 0}, {2, 0, 0}, {1, 0, 0}, {3, 0, 0});
  CHECK(r.dist == doctest::Approx(0.0));
  // antiparallel with offset
  r = segment_closest_points({0, 0, 0}, {1, 0, 0}, {2, 0.5, 0}, {1.5, 0.5, 0});
  CHECK(r.dist == doctest::Approx(std::hypot(0.5, 0.5)));
  // nearly parallel
  r = segment_closest_points({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 1e-9});
  CHECK(r.dist == doctest::Approx(1.0));
  CHECK(std::isfinite(r.s));
  CHECK(std::isfinite(r.t));
}

TEST_CASE("capsule_signed_distance: spheres and penetration") {
  const Capsule a{{0, 0, 0}, {0, 0, 0}, 0.1};
  const Capsule b{{1, 0, 0}, {1, 0, 0}, 0.2};
  auto w = capsule_signed_distance(a, b);
  CHECK(w.phi == doctest::Approx(0.7));
  CHECK((w.point_a - Vec3(0.1, 0, 0)).norm() < 1e-15);
  CHECK((w.point_b - Vec3(0.8, 0, 0)).norm() < 1e-15);
  CHECK((w.normal - Vec3(-1, 0, 0)).norm() < 1e-15);

  const Capsule c{{0, 0, 0}, {0, 0, 0}, 0.2};
  const Capsule d{{0.25, 0, 0}, {0.25, 0, 0}, 0.1};
  w = capsule_signed_distance(c, d);
  CHECK(w.phi == doctest::Approx(-0.05));
  // normal still oriented from obstacle witness toward robot witness
  CHECK(w.normal.x() < 0.0);

  w = capsule_signed_distance(c, c);
  CHECK(w.degenerate);
  CHECK(w.phi == doctest::Approx(-0.4));
}

TEST_CASE("capsule_signed_distance: grid oracle minus radii") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ur(0.0, 0.3);
  for (int trial = 0; trial < 200; ++trial) {
    const Capsule a{random_point(rng), random_point(rng), ur(rng)};
    const Capsule b{random_point(rng), random_point(rng), ur(rng)};
    const auto w = capsule_signed_distance(a, b);
    const double oracle = refined_distance(a.p0, a.p1, b.p0, b.p1) - a.radius - b.radius;
    CHECK(std::abs(w.phi - oracle) < 1e-9);
    // witness points sit on the witness line at the right offsets
    if (!w.degenerate) {
      CHECK(std::abs((w.point_a - w.segment_a).norm() - a.radius) < 1e-12);
      CHECK(std::abs((w.point_b - w.segment_b).norm() - b.radius) < 1e-12);
      CHECK(std::abs((w.point_a - w.point_b).dot(w.normal) - w.phi) < 1e-12);
    }
  }
}

TEST_CASE("capsule_signed_distance: exact symmetry, rigid invariance, sign") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ur(0.0, 0.5);
  std::uniform_real_distribution<double> ang(-M_PI, M_PI);
  for (int trial = 0; trial < 500; ++trial) {
    const Capsule a{random_point(rng), random_point(rng), ur(rng)};
    const Capsule b{random_point(rng), random_point(rng), ur(rng)};
    const auto ab = capsule_signed_distance(a, b);
    const auto ba = capsule_signed_distance(b, a);
    CHECK(ab.phi == ba.phi);

    Transform t;
    t.position = random_point(rng, 5.0);
    t.orientation = quat_from_rpy(ang(rng), ang(rng), ang(rng));
    const auto moved = capsule_signed_distance(a.transformed(t), b.transformed(t));
    CHECK(std::abs(moved.phi - ab.phi) < 1e-10);

    const double seg = segment_closest_points(a.p0, a.p1, b.p0, b.p1).dist;
    CHECK((ab.phi < 0.0) == (seg < a.radius + b.radius));
  }
}

TEST_CASE("min_robot_obstacle_distance: selection and empty lists") {
  const Capsule obstacle{{0, 0, 0}, {0, 0, 0}, 0.0};
  std::vector<Capsule> links{{{0.3, 0, 0}, {0.3, 0, 0}, 0.0}, {{0.1, 0, 0}, {0.1, 0, 0}, 0.0}};
  auto r = min_robot_obstacle_distance(links, std::span(&obstacle, 1));
  REQUIRE(r);
  CHECK(r->per_obstacle[0].phi == doctest::Approx(0.1));
  CHECK(r->per_obstacle[0].collider == 1);
  CHECK(r->global.obstacle == 0);

  const auto single = min_robot_obstacle_distance(std::span(links.data(), 1), std::span(&obstacle, 1));
  CHECK(single->global.phi == capsule_signed_distance(links[0], obstacle).phi);

  CHECK_FALSE(min_robot_obstacle_distance(links, {}).has_value());
  CHECK_FALSE(min_robot_obstacle_distance({}, std::span(&obstacle, 1)).has_value());
}

TEST_CASE("min_robot_obstacle_distance: exhaustive enumeration oracle") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ur(0.01, 0.1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Capsule> links(8), obstacles(5);
    for (auto& c : links) c = {random_point(rng), random_point(rng), ur(rng)};
    for (auto& c : obstacles) c = {random_point(rng), random_point(rng), ur(rng)};
    const auto r = min_robot_obstacle_distance(links, obstacles);
    REQUIRE(r);
    double global = INFINITY;
    for (std::size_t o = 0; o < obstacles.size(); ++o) {
      double best = INFINITY;
      for (const auto& l : links) {
        best = std::min(best, refined_distance(l.p0, l.p1, obstacles[o].p0, obstacles[o].p1) -
                                  l.radius - obstacles[o].radius);
      }
      CHECK(std::abs(r->per_obstacle[o].phi - best) < 1e-9);
      global = std::min(global, best);
    }
    CHECK(std::abs(r->global.phi - global) < 1e-9);
  }
}

TEST_CASE("distance_gradient: axis-aligned and tangent cases") {
  RobotModel prism;
  prism.joints.push_back({"z", JointKind::prismatic, Vec3::UnitZ(), Transform{}, -1, 1});
  prism.colliders.push_back({0, Vec3::Zero(), Vec3::Zero(), 0.0});
  const Capsule below{{0, 0, -1}, {0, 0, -1}, 0.0};
  const JointVector q0 = JointVector::Zero(1);
  auto links = link_capsules_world(prism, q0);
  auto w = min_robot_obstacle_distance(links, std::span(&below, 1))->global;
  auto g = distance_gradient(prism, q0, w);
  CHECK(g.grad[0] == doctest::Approx(1.0));

  RobotModel arm;
  arm.joints.push_back({"yaw", JointKind::revolute, Vec3::UnitZ(), Transform{}, -3, 3});
  arm.colliders.push_back({0, Vec3(1, 0, 0), Vec3(1, 0, 0), 0.0});
  const Capsule far{{1e6, 0, 0}, {1e6, 0, 0}, 0.0};
  links = link_capsules_world(arm, q0);
  w = min_robot_obstacle_distance(links, std::span(&far, 1))->global;
  g = distance_gradient(arm, q0, w);
  CHECK(std::abs(g.grad[0]) < 1e-12);
}

TEST_CASE("distance_gradient: degenerate witness falls back or flags") {
  RobotModel prism;
  prism.joints.push_back({"z", JointKind::prismatic, Vec3::UnitZ(), Transform{}, -1, 1});
  prism.colliders.push_back({0, Vec3::Zero(), Vec3::Zero(), 0.1});
  const Capsule here{{0, 0, 0}, {0, 0, 0}, 0.1};
  const JointVector q0 = JointVector::Zero(1);
  const auto links = link_capsules_world(prism, q0);
  const auto w = min_robot_obstacle_distance(links, std::span(&here, 1))->global;
  REQUIRE(w.degenerate);
  auto g = distance_gradient(prism, q0, w);
  CHECK(g.degenerate);
  CHECK(g.grad[0] == 0.0);
  g = distance_gradient(prism, q0, w, Vec3(0, 0, -1));
  CHECK(g.degenerate);
  CHECK(g.grad[0] == doctest::Approx(-1.0));
}

TEST_CASE("distance_gradient matches finite differences on the bundled arm") {
  const auto model = bundled_arm();
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> ur(0.02, 0.08);
  int checked = 0;
  for (int trial = 0; trial < 400 && checked < 100; ++trial) {
    JointVector q(7);
    for (int i = 0; i < 7; ++i) {
      std::uniform_real_distribution<double> u(model.joints[i].lower, model.joints[i].upper);
      q[i] = u(rng);
    }
    const Vec3 c = random_point(rng, 0.8) + Vec3(0, 0, 0.6);
    const Capsule obstacle{c, c + random_point(rng, 0.2), ur(rng)};
    auto phi_at = [&](const JointVector& x) {
      return min_robot_obstacle_distance(link_capsules_world(model, x), std::span(&obstacle, 1))
          ->global;
    };
    const auto w = phi_at(q);
    if (w.phi < 0.0 || w.degenerate) continue;
    // skip configurations near a witness switch between links
    const auto all = pairwise_distances(link_capsules_world(model, q), std::span(&obstacle, 1));
    bool near_switch = false;
    for (const auto& p : all) {
      if (p.collider != w.collider && p.phi - w.phi < 1e-3) near_switch = true;
    }
    if (near_switch) continue;

    const auto kin = forward_kinematics(model, q);
    const auto g = distance_gradient(model, kin, w);
    Eigen::VectorXd fd(7);
    const double h = 1e-6;
    bool switched = false;
    for (int j = 0; j < 7; ++j) {
      JointVector qp = q, qm = q;
      qp[j] += h;
      qm[j] -= h;
      const auto wp = phi_at(qp), wm = phi_at(qm);
      switched |= wp.collider != w.collider || wm.collider != w.collider;
      fd[j] = (wp.phi - wm.phi) / (2 * h);
    }
    if (switched) continue;
    ++checked;
    CHECK((g.grad - fd).norm() <= 1e-4 * fd.norm() + 1e-8);

    const int link = model.colliders[w.collider].link_index;
    const Eigen::MatrixXd jp = point_jacobian(model, kin, link, w.segment_a);
    const double op_norm = Eigen::JacobiSVD<Eigen::MatrixXd>(jp).singularValues()[0];
    CHECK(g.grad.norm() <= op_norm * (1.0 + 1e-12));
  }
  CHECK(checked == 100);
}
