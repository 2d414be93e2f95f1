#include "rba/kernels.hpp"

#include <cstdlib>
#include <string>

#include "rba/errors.hpp"

#if defined(RBA_HAVE_AVX2_LANE)
namespace rba::kernels {
const Ops& avx2_ops();
}
#endif

namespace rba::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(RBA_HAVE_AVX2_LANE) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Lane detect_lane() {
  if (const char* env = std::getenv("RBA_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return Lane::scalar;
    if (want == "avx2" && lane_available(Lane::avx2)) return Lane::avx2;
    // Unknown or unavailable request falls through to auto-detection.
  }
  return lane_available(Lane::avx2) ? Lane::avx2 : Lane::scalar;
}

Lane& current() {
  static Lane lane = detect_lane();
  return lane;
}

}  // namespace

std::string_view lane_name(Lane lane) {
  switch (lane) {
    case Lane::scalar: return "scalar";
    case Lane::avx2: return "avx2";
  }
  return "unknown";
}

bool lane_available(Lane lane) {
  if (lane == Lane::scalar) return true;
  static const bool avx2 = cpu_has_avx2();
  return avx2;
}

const Ops& active() {
#if defined(RBA_HAVE_AVX2_LANE)
  if (current() == Lane::avx2) return avx2_ops();
#endif
  return scalar_ops();
}

Lane active_lane() { return current(); }

void force_lane(Lane lane) {
  if (!lane_available(lane)) {
    throw ValidationError("LaneUnavailable",
                          "kernel lane not available on this host: " +
                              std::string(lane_name(lane)));
  }
  current() = lane;
}

void reset_lane() { current() = detect_lane(); }

}  // namespace rba::kernels
