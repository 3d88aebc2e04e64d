#include <cmath>

#include "safeik/kernels/segment_kernels.hpp"

namespace safeik::kernels {

void SegmentPairBatch::resize(std::size_t n) {
  for (auto* v : {&ax0, &ay0, &az0, &ax1, &ay1, &az1, &bx0, &by0, &bz0, &bx1, &by1, &bz1}) {
    v->resize(n);
  }
}

void SegmentPairBatch::set(std::size_t i, const double a0[3], const double a1[3],
                           const double b0[3], const double b1[3]) {
  ax0[i] = a0[0], ay0[i] = a0[1], az0[i] = a0[2];
  ax1[i] = a1[0], ay1[i] = a1[1], az1[i] = a1[2];
  bx0[i] = b0[0], by0[i] = b0[1], bz0[i] = b0[2];
  bx1[i] = b1[0], by1[i] = b1[1], bz1[i] = b1[2];
}

namespace scalar {
namespace {

// Same semantics as maxpd/minpd: the second operand wins on ties.
inline double vmax(double a, double b) { return a > b ? a : b; }
inline double vmin(double a, double b) { return a < b ? a : b; }
inline double clamp01(double x) { return vmin(vmax(x, 0.0), 1.0); }

}  // namespace

void closest_pair(const double a0[3], const double a1[3], const double b0[3], const double b1[3],
                  double& s_out, double& t_out, double& dist_out) {
  const double d1x = a1[0] - a0[0], d1y = a1[1] - a0[1], d1z = a1[2] - a0[2];
  const double d2x = b1[0] - b0[0], d2y = b1[1] - b0[1], d2z = b1[2] - b0[2];
  const double rx = a0[0] - b0[0], ry = a0[1] - b0[1], rz = a0[2] - b0[2];

  const double a = d1x * d1x + d1y * d1y + d1z * d1z;
  const double e = d2x * d2x + d2y * d2y + d2z * d2z;
  const double f = d2x * rx + d2y * ry + d2z * rz;
  const double c = d1x * rx + d1y * ry + d1z * rz;
  const double b = d1x * d2x + d1y * d2y + d1z * d2z;

  const bool a_deg = a <= kDegenerateLengthSq;
  const bool e_deg = e <= kDegenerateLengthSq;
  const double a_safe = a_deg ? 1.0 : a;
  const double e_safe = e_deg ? 1.0 : e;

  const double denom = a * e - b * b;
  const bool skew = denom > (kParallelTolerance * a) * e;
  const double denom_safe = skew ? denom : 1.0;

  const double s_free = skew ? clamp01((b * f - c * e) / denom_safe) : 0.0;
  const double t_raw = (b * s_free + f) / e_safe;
  const double s_tlo = clamp01((0.0 - c) / a_safe);
  const double s_thi = clamp01((b - c) / a_safe);
  const double t_gen = clamp01(t_raw);
  const double s_gen = t_raw < 0.0 ? s_tlo : (t_raw > 1.0 ? s_thi : s_free);

  const double t_pt = clamp01(f / e_safe);

  double s, t;
  if (a_deg) {
    s = 0.0;
    t = e_deg ? 0.0 : t_pt;
  } else if (e_deg) {
    s = s_tlo;
    t = 0.0;
  } else {
    s = s_gen;
    t = t_gen;
  }

  const double px = (a0[0] + s * d1x) - (b0[0] + t * d2x);
  const double py = (a0[1] + s * d1y) - (b0[1] + t * d2y);
  const double pz = (a0[2] + s * d1z) - (b0[2] + t * d2z);
  s_out = s;
  t_out = t;
  dist_out = std::sqrt(px * px + py * py + pz * pz);
}

void closest_points(const SegmentPairBatch& in, std::size_t begin, std::size_t end,
                    SegmentPairResult& out) {
  for (std::size_t i = begin; i < end; ++i) {
    const double a0[3] = {in.ax0[i], in.ay0[i], in.az0[i]};
    const double a1[3] = {in.ax1[i], in.ay1[i], in.az1[i]};
    const double b0[3] = {in.bx0[i], in.by0[i], in.bz0[i]};
    const double b1[3] = {in.bx1[i], in.by1[i], in.bz1[i]};
    closest_pair(a0, a1, b0, b1, out.s[i], out.t[i], out.dist[i]);
  }
}

}  // namespace scalar
}  // namespace safeik::kernels
