#pragma once

#include "safeik/pose.hpp"

namespace safeik {

/// Points within `radius` of the segment p0-p1. radius 0 is a segment,
/// p0 == p1 a sphere.
struct Capsule {
  Vec3 p0 = Vec3::Zero();
  Vec3 p1 = Vec3::Zero();
  double radius = 0.0;

  Capsule transformed(const Transform& t) const { return {t.apply(p0), t.apply(p1), radius}; }
  Capsule translated(const Vec3& d) const { return {p0 + d, p1 + d, radius}; }
};

}  // namespace safeik
