#pragma once

// Batched closest points between pairs of 3-D segments.
//
// Every pair is evaluated with one branch-free formulation that the scalar
// reference and the AVX2 variant implement operation-for-operation, so both
// produce bit-identical (s, t, dist). The active implementation is picked once
// at startup from CPUID and can be pinned with SAFEIK_SIMD=scalar|avx2.

#include <cstddef>
#include <string_view>
#include <vector>

namespace safeik::kernels {

/// Structure-of-arrays input: segment a = (a0, a1), segment b = (b0, b1).
struct SegmentPairBatch {
  std::vector<double> ax0, ay0, az0, ax1, ay1, az1;
  std::vector<double> bx0, by0, bz0, bx1, by1, bz1;

  std::size_t size() const { return ax0.size(); }
  void resize(std::size_t n);
  void set(std::size_t i, const double a0[3], const double a1[3], const double b0[3],
           const double b1[3]);
};

struct SegmentPairResult {
  std::vector<double> s, t, dist;
  void resize(std::size_t n) {
    s.resize(n);
    t.resize(n);
    dist.resize(n);
  }
};

/// Squared-length threshold below which a segment is treated as a point.
inline constexpr double kDegenerateLengthSq = 1e-20;
/// Relative threshold on sin^2 of the inter-segment angle for the parallel case.
inline constexpr double kParallelTolerance = 1e-12;

using SegmentKernelFn = void (*)(const SegmentPairBatch& in, std::size_t begin, std::size_t end,
                                 SegmentPairResult& out);

namespace scalar {
/// Reference implementation for a single pair.
void closest_pair(const double a0[3], const double a1[3], const double b0[3], const double b1[3],
                  double& s, double& t, double& dist);
void closest_points(const SegmentPairBatch& in, std::size_t begin, std::size_t end,
                    SegmentPairResult& out);
}  // namespace scalar

#if defined(SAFEIK_HAVE_AVX2_KERNEL) || defined(__x86_64__)
namespace avx2 {
void closest_points(const SegmentPairBatch& in, std::size_t begin, std::size_t end,
                    SegmentPairResult& out);
}  // namespace avx2
#endif

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);
Isa active_isa();
/// Overrides runtime selection; returns false (and changes nothing) if the ISA
/// is not supported on this CPU or build.
bool set_active_isa(Isa isa);

/// Runs the active implementation over the whole batch.
void closest_points(const SegmentPairBatch& in, SegmentPairResult& out);
/// Runs a specific implementation (for equivalence testing).
void closest_points(Isa isa, const SegmentPairBatch& in, SegmentPairResult& out);

}  // namespace safeik::kernels
