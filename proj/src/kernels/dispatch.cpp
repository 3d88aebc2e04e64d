#include <atomic>
#include <cstdlib>
#include <string>

#include "safeik/kernels/segment_kernels.hpp"

namespace safeik::kernels {
namespace {

Isa detect() {
  if (const char* env = std::getenv("SAFEIK_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return Isa::scalar;
    if (v == "avx2" && isa_supported(Isa::avx2)) return Isa::avx2;
  }
  return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

SegmentKernelFn kernel_for(Isa isa) {
#if defined(SAFEIK_HAVE_AVX2_KERNEL)
  if (isa == Isa::avx2) return &avx2::closest_points;
#else
  (void)isa;
#endif
  return &scalar::closest_points;
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) {
  if (isa == Isa::scalar) return true;
#if defined(SAFEIK_HAVE_AVX2_KERNEL)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

bool set_active_isa(Isa isa) {
  if (!isa_supported(isa)) return false;
  active().store(isa, std::memory_order_relaxed);
  return true;
}

void closest_points(const SegmentPairBatch& in, SegmentPairResult& out) {
  closest_points(active_isa(), in, out);
}

void closest_points(Isa isa, const SegmentPairBatch& in, SegmentPairResult& out) {
  out.resize(in.size());
  kernel_for(isa)(in, 0, in.size(), out);
}

}  // namespace safeik::kernels
