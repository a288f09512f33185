#include <limits>

#include "sinusnav/simd/kernels.hpp"

namespace sinusnav::simd::detail {

double min_sq_distance_scalar(const double* xs, const double* ys, const double* zs, std::size_t n,
                              double px, double py, double pz) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - px;
    const double dy = ys[i] - py;
    const double dz = zs[i] - pz;
    const double d = dx * dx + dy * dy + dz * dz;
    if (d < best) best = d;
  }
  return best;
}

void threshold_u8_scalar(const std::uint8_t* in, std::uint8_t* out, std::size_t n,
                         std::uint8_t threshold) {
  for (std::size_t i = 0; i < n; ++i) out[i] = in[i] >= threshold ? 1 : 0;
}

}  // namespace sinusnav::simd::detail
