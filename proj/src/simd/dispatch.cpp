#include <cstdlib>
#include <string>

#include "sinusnav/simd/kernels.hpp"

namespace sinusnav::simd {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend detect() {
  if (const char* env = std::getenv("SINUSNAV_SIMD"); env != nullptr && std::string(env) == "scalar") {
    return Backend::scalar;
  }
  return backend_available(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

}  // namespace

std::string_view to_string(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

bool backend_available(Backend b) {
  if (b == Backend::scalar) return true;
  static const bool avx2 = detail::avx2_compiled() && cpu_has_avx2();
  return avx2;
}

Backend detected_backend() {
  static const Backend backend = detect();
  return backend;
}

double min_sq_distance(Backend b, const double* xs, const double* ys, const double* zs,
                       std::size_t n, double px, double py, double pz) {
  if (b == Backend::avx2 && backend_available(Backend::avx2)) {
    return detail::min_sq_distance_avx2(xs, ys, zs, n, px, py, pz);
  }
  return detail::min_sq_distance_scalar(xs, ys, zs, n, px, py, pz);
}

void threshold_u8(Backend b, const std::uint8_t* in, std::uint8_t* out, std::size_t n,
                  std::uint8_t threshold) {
  if (b == Backend::avx2 && backend_available(Backend::avx2)) {
    detail::threshold_u8_avx2(in, out, n, threshold);
    return;
  }
  detail::threshold_u8_scalar(in, out, n, threshold);
}

}  // namespace sinusnav::simd
