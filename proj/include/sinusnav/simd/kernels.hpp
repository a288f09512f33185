#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference and an AVX2
// variant; both must return bit-identical results (no FMA contraction, and
// only order-independent reductions such as min).

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace sinusnav::simd {

enum class Backend { scalar, avx2 };

std::string_view to_string(Backend b);

/// Best backend the running CPU supports. SINUSNAV_SIMD=scalar forces the
/// reference path.
Backend detected_backend();
bool backend_available(Backend b);

/// min_i (x_i-px)^2 + (y_i-py)^2 + (z_i-pz)^2 over SoA coordinates; +inf if n == 0.
double min_sq_distance(Backend b, const double* xs, const double* ys, const double* zs,
                       std::size_t n, double px, double py, double pz);

inline double min_sq_distance(const double* xs, const double* ys, const double* zs, std::size_t n,
                              double px, double py, double pz) {
  return min_sq_distance(detected_backend(), xs, ys, zs, n, px, py, pz);
}

/// out[i] = in[i] >= threshold ? 1 : 0
void threshold_u8(Backend b, const std::uint8_t* in, std::uint8_t* out, std::size_t n,
                  std::uint8_t threshold);

inline void threshold_u8(const std::uint8_t* in, std::uint8_t* out, std::size_t n,
                         std::uint8_t threshold) {
  threshold_u8(detected_backend(), in, out, n, threshold);
}

namespace detail {
double min_sq_distance_scalar(const double* xs, const double* ys, const double* zs, std::size_t n,
                              double px, double py, double pz);
double min_sq_distance_avx2(const double* xs, const double* ys, const double* zs, std::size_t n,
                            double px, double py, double pz);
void threshold_u8_scalar(const std::uint8_t* in, std::uint8_t* out, std::size_t n,
                         std::uint8_t threshold);
void threshold_u8_avx2(const std::uint8_t* in, std::uint8_t* out, std::size_t n,
                       std::uint8_t threshold);
bool avx2_compiled();
}  // namespace detail

}  // namespace sinusnav::simd
