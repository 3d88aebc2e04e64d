#include "safeik/blending.hpp"

#include <cmath>
#include <stdexcept>

namespace safeik {

void ArbitrationParams::validate() const {
  if (!(scale > 0.0)) throw std::invalid_argument("arbitration scale must be positive");
  if (!(fixed_alpha >= 0.0 && fixed_alpha <= 1.0)) {
    throw std::invalid_argument("fixed alpha must lie in [0, 1]");
  }
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double arbitration_weight(const Vec3& x_human, const Vec3& x_reference,
                          const ArbitrationParams& params) {
  if (params.mode == ArbitrationMode::fixed) return params.fixed_alpha;
  const double disagreement = (x_human - x_reference).norm();
  return logistic(params.slope * (disagreement / params.scale + params.bias));
}

Quat slerp(const Quat& from, const Quat& to, double alpha) {
  // angle between the two 4-vectors, accurate near 0
  const double theta =
      2.0 * std::atan2((from.coeffs() - to.coeffs()).norm(), (from.coeffs() + to.coeffs()).norm());
  if (theta < 1e-6) {
    Quat q;
    q.coeffs() = (1.0 - alpha) * from.coeffs() + alpha * to.coeffs();
    return q.normalized();
  }
  const double sin_theta = std::sin(theta);
  const double wa = std::sin((1.0 - alpha) * theta) / sin_theta;
  const double wb = std::sin(alpha * theta) / sin_theta;
  Quat q;
  q.coeffs() = wa * from.coeffs() + wb * to.coeffs();
  return q.normalized();
}

Pose blend_pose(const BlendInput& input, double alpha) {
  const Quat& qh = input.human.orientation;
  Quat qr = input.reference.orientation;
  if (qh.dot(qr) < 0.0) qr.coeffs() = -qr.coeffs();

  Pose out;
  out.position = (1.0 - alpha) * input.human.position + alpha * input.reference.position;
  if (alpha <= 0.0) {
    out.orientation = qh;
  } else if (alpha >= 1.0) {
    out.orientation = qr;
  } else {
    out.orientation = slerp(qh, qr, alpha);
  }
  return out;
}

}  // namespace safeik
