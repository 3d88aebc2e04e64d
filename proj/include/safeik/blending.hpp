#pragma once

#include "safeik/pose.hpp"

namespace safeik {

enum class ArbitrationMode { fixed, sigmoid };

/// alpha = logistic(slope * (|x_h - x_r| / scale + bias)) in sigmoid mode.
/// The sign of `slope` selects the direction: slope < 0 hands control back to
/// the operator as the two commands disagree.
struct ArbitrationParams {
  double slope = -4.0;
  double scale = 0.2;  // m
  double bias = 0.0;
  ArbitrationMode mode = ArbitrationMode::sigmoid;
  double fixed_alpha = 0.5;

  void validate() const;
};

struct BlendInput {
  Pose human;
  Pose reference;
};

double logistic(double x);

double arbitration_weight(const Vec3& x_human, const Vec3& x_reference,
                          const ArbitrationParams& params);

/// Great-circle interpolation; falls back to normalized lerp below 1e-6 rad.
/// No hemisphere correction is applied here.
Quat slerp(const Quat& from, const Quat& to, double alpha);

/// Linear position blend and SLERP after flipping the reference quaternion
/// into the operator's hemisphere.
Pose blend_pose(const BlendInput& input, double alpha);

}  // namespace safeik
