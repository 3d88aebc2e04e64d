#include "safeik/geometry.hpp"

#include <algorithm>
#include <array>

#include "safeik/kernels/segment_kernels.hpp"

namespace safeik {
namespace {

constexpr double kCoincidentWitness = 1e-9;

// Pairs are always evaluated in a canonical order so that d(A, B) and d(B, A)
// run the identical floating-point sequence.
bool canonical_swap(const Capsule& a, const Capsule& b) {
  const std::array<double, 7> ka{a.p0.x(), a.p0.y(), a.p0.z(), a.p1.x(), a.p1.y(), a.p1.z(), a.radius};
  const std::array<double, 7> kb{b.p0.x(), b.p0.y(), b.p0.z(), b.p1.x(), b.p1.y(), b.p1.z(), b.radius};
  return kb < ka;
}

void fill_pair(kernels::SegmentPairBatch& batch, std::size_t i, const Capsule& a, const Capsule& b,
               bool swapped) {
  const Capsule& first = swapped ? b : a;
  const Capsule& second = swapped ? a : b;
  batch.set(i, first.p0.data(), first.p1.data(), second.p0.data(), second.p1.data());
}

DistanceWitness make_witness(const Capsule& a, const Capsule& b, bool swapped, double s, double t,
                             double dist) {
  const Capsule& first = swapped ? b : a;
  const Capsule& second = swapped ? a : b;
  const Vec3 w_first = first.p0 + s * (first.p1 - first.p0);
  const Vec3 w_second = second.p0 + t * (second.p1 - second.p0);

  DistanceWitness w;
  w.segment_a = swapped ? w_second : w_first;
  w.segment_b = swapped ? w_first : w_second;
  w.phi = dist - (a.radius + b.radius);
  if (dist < kCoincidentWitness) {
    w.degenerate = true;
    w.point_a = w.segment_a;
    w.point_b = w.segment_b;
  } else {
    w.normal = (w.segment_a - w.segment_b) / dist;
    w.point_a = w.segment_a - a.radius * w.normal;
    w.point_b = w.segment_b + b.radius * w.normal;
  }
  return w;
}

}  // namespace

SegmentClosest segment_closest_points(const Vec3& a0, const Vec3& a1, const Vec3& b0,
                                      const Vec3& b1) {
  SegmentClosest r;
  kernels::scalar::closest_pair(a0.data(), a1.data(), b0.data(), b1.data(), r.s, r.t, r.dist);
  return r;
}

DistanceWitness capsule_signed_distance(const Capsule& a, const Capsule& b) {
  const bool swapped = canonical_swap(a, b);
  const Capsule& first = swapped ? b : a;
  const Capsule& second = swapped ? a : b;
  double s = 0.0, t = 0.0, dist = 0.0;
  kernels::scalar::closest_pair(first.p0.data(), first.p1.data(), second.p0.data(),
                                second.p1.data(), s, t, dist);
  return make_witness(a, b, swapped, s, t, dist);
}

std::vector<DistanceWitness> pairwise_distances(std::span<const Capsule> links,
                                                std::span<const Capsule> obstacles) {
  const std::size_t count = links.size() * obstacles.size();
  thread_local kernels::SegmentPairBatch batch;
  thread_local kernels::SegmentPairResult result;
  thread_local std::vector<char> swapped;
  batch.resize(count);
  swapped.resize(count);
  for (std::size_t l = 0; l < links.size(); ++l) {
    for (std::size_t o = 0; o < obstacles.size(); ++o) {
      const std::size_t i = l * obstacles.size() + o;
      swapped[i] = canonical_swap(links[l], obstacles[o]);
      fill_pair(batch, i, links[l], obstacles[o], swapped[i]);
    }
  }
  kernels::closest_points(batch, result);

  std::vector<DistanceWitness> out;
  out.reserve(count);
  for (std::size_t l = 0; l < links.size(); ++l) {
    for (std::size_t o = 0; o < obstacles.size(); ++o) {
      const std::size_t i = l * obstacles.size() + o;
      DistanceWitness w = make_witness(links[l], obstacles[o], swapped[i], result.s[i],
                                       result.t[i], result.dist[i]);
      w.collider = static_cast<int>(l);
      w.obstacle = static_cast<int>(o);
      out.push_back(w);
    }
  }
  return out;
}

std::optional<ProximityResult> min_robot_obstacle_distance(std::span<const Capsule> links,
                                                           std::span<const Capsule> obstacles) {
  if (links.empty() || obstacles.empty()) return std::nullopt;
  const std::vector<DistanceWitness> pairs = pairwise_distances(links, obstacles);
  ProximityResult r;
  r.per_obstacle.resize(obstacles.size());
  for (std::size_t o = 0; o < obstacles.size(); ++o) {
    const DistanceWitness* best = &pairs[o];
    for (std::size_t l = 1; l < links.size(); ++l) {
      const DistanceWitness& cand = pairs[l * obstacles.size() + o];
      if (cand.phi < best->phi) best = &cand;
    }
    r.per_obstacle[o] = *best;
  }
  r.global = *std::min_element(r.per_obstacle.begin(), r.per_obstacle.end(),
                               [](const auto& x, const auto& y) { return x.phi < y.phi; });
  return r;
}

DistanceGradient distance_gradient(const RobotModel& model, const Kinematics& kin,
                                   const DistanceWitness& witness,
                                   const std::optional<Vec3>& fallback_normal) {
  DistanceGradient g;
  g.grad = Eigen::VectorXd::Zero(model.dof());
  if (witness.degenerate) {
    g.degenerate = true;
    if (!fallback_normal) return g;
    g.normal = *fallback_normal;
  } else {
    g.normal = witness.normal;
  }
  const int link = model.colliders.at(witness.collider).link_index;
  g.grad = point_jacobian(model, kin, link, witness.segment_a).transpose() * g.normal;
  return g;
}

DistanceGradient distance_gradient(const RobotModel& model, const JointVector& q,
                                   const DistanceWitness& witness,
                                   const std::optional<Vec3>& fallback_normal) {
  return distance_gradient(model, forward_kinematics(model, q), witness, fallback_normal);
}

}  // namespace safeik
