// Built with -mavx2 (never -mfma): every lane performs exactly the operations
// of scalar::closest_pair in the same order.

#include <immintrin.h>

#include "safeik/kernels/segment_kernels.hpp"

namespace safeik::kernels::avx2 {
namespace {

inline __m256d clamp01(__m256d x, __m256d zero, __m256d one) {
  return _mm256_min_pd(_mm256_max_pd(x, zero), one);
}

// mask ? yes : no
inline __m256d select(__m256d mask, __m256d yes, __m256d no) {
  return _mm256_blendv_pd(no, yes, mask);
}

inline __m256d dot3(__m256d ax, __m256d ay, __m256d az, __m256d bx, __m256d by, __m256d bz) {
  return _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(ax, bx), _mm256_mul_pd(ay, by)),
                       _mm256_mul_pd(az, bz));
}

}  // namespace

void closest_points(const SegmentPairBatch& in, std::size_t begin, std::size_t end,
                    SegmentPairResult& out) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d deg_eps = _mm256_set1_pd(kDegenerateLengthSq);
  const __m256d par_tol = _mm256_set1_pd(kParallelTolerance);

  std::size_t i = begin;
  for (; i + 4 <= end; i += 4) {
    const __m256d a0x = _mm256_loadu_pd(&in.ax0[i]), a0y = _mm256_loadu_pd(&in.ay0[i]),
                  a0z = _mm256_loadu_pd(&in.az0[i]);
    const __m256d b0x = _mm256_loadu_pd(&in.bx0[i]), b0y = _mm256_loadu_pd(&in.by0[i]),
                  b0z = _mm256_loadu_pd(&in.bz0[i]);
    const __m256d d1x = _mm256_sub_pd(_mm256_loadu_pd(&in.ax1[i]), a0x);
    const __m256d d1y = _mm256_sub_pd(_mm256_loadu_pd(&in.ay1[i]), a0y);
    const __m256d d1z = _mm256_sub_pd(_mm256_loadu_pd(&in.az1[i]), a0z);
    const __m256d d2x = _mm256_sub_pd(_mm256_loadu_pd(&in.bx1[i]), b0x);
    const __m256d d2y = _mm256_sub_pd(_mm256_loadu_pd(&in.by1[i]), b0y);
    const __m256d d2z = _mm256_sub_pd(_mm256_loadu_pd(&in.bz1[i]), b0z);
    const __m256d rx = _mm256_sub_pd(a0x, b0x);
    const __m256d ry = _mm256_sub_pd(a0y, b0y);
    const __m256d rz = _mm256_sub_pd(a0z, b0z);

    const __m256d a = dot3(d1x, d1y, d1z, d1x, d1y, d1z);
    const __m256d e = dot3(d2x, d2y, d2z, d2x, d2y, d2z);
    const __m256d f = dot3(d2x, d2y, d2z, rx, ry, rz);
    const __m256d c = dot3(d1x, d1y, d1z, rx, ry, rz);
    const __m256d b = dot3(d1x, d1y, d1z, d2x, d2y, d2z);

    const __m256d a_deg = _mm256_cmp_pd(a, deg_eps, _CMP_LE_OQ);
    const __m256d e_deg = _mm256_cmp_pd(e, deg_eps, _CMP_LE_OQ);
    const __m256d a_safe = select(a_deg, one, a);
    const __m256d e_safe = select(e_deg, one, e);

    const __m256d denom = _mm256_sub_pd(_mm256_mul_pd(a, e), _mm256_mul_pd(b, b));
    const __m256d skew =
        _mm256_cmp_pd(denom, _mm256_mul_pd(_mm256_mul_pd(par_tol, a), e), _CMP_GT_OQ);
    const __m256d denom_safe = select(skew, denom, one);

    const __m256d s_num = _mm256_sub_pd(_mm256_mul_pd(b, f), _mm256_mul_pd(c, e));
    const __m256d s_free = select(skew, clamp01(_mm256_div_pd(s_num, denom_safe), zero, one), zero);
    const __m256d t_raw = _mm256_div_pd(_mm256_add_pd(_mm256_mul_pd(b, s_free), f), e_safe);
    const __m256d s_tlo = clamp01(_mm256_div_pd(_mm256_sub_pd(zero, c), a_safe), zero, one);
    const __m256d s_thi = clamp01(_mm256_div_pd(_mm256_sub_pd(b, c), a_safe), zero, one);
    const __m256d t_gen = clamp01(t_raw, zero, one);
    const __m256d t_lt = _mm256_cmp_pd(t_raw, zero, _CMP_LT_OQ);
    const __m256d t_gt = _mm256_cmp_pd(t_raw, one, _CMP_GT_OQ);
    const __m256d s_gen = select(t_lt, s_tlo, select(t_gt, s_thi, s_free));

    const __m256d t_pt = clamp01(_mm256_div_pd(f, e_safe), zero, one);

    // a_deg: s = 0, t = e_deg ? 0 : t_pt; else e_deg: s = s_tlo, t = 0; else general
    const __m256d s = select(a_deg, zero, select(e_deg, s_tlo, s_gen));
    const __m256d t = select(a_deg, select(e_deg, zero, t_pt), select(e_deg, zero, t_gen));

    const __m256d px = _mm256_sub_pd(_mm256_add_pd(a0x, _mm256_mul_pd(s, d1x)),
                                     _mm256_add_pd(b0x, _mm256_mul_pd(t, d2x)));
    const __m256d py = _mm256_sub_pd(_mm256_add_pd(a0y, _mm256_mul_pd(s, d1y)),
                                     _mm256_add_pd(b0y, _mm256_mul_pd(t, d2y)));
    const __m256d pz = _mm256_sub_pd(_mm256_add_pd(a0z, _mm256_mul_pd(s, d1z)),
                                     _mm256_add_pd(b0z, _mm256_mul_pd(t, d2z)));
    _mm256_storeu_pd(&out.s[i], s);
    _mm256_storeu_pd(&out.t[i], t);
    _mm256_storeu_pd(&out.dist[i], _mm256_sqrt_pd(dot3(px, py, pz, px, py, pz)));
  }
  scalar::closest_points(in, i, end, out);
}

}  // namespace safeik::kernels::avx2
