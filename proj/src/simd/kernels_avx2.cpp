// Compiled with -mavx2 on x86-64; only reached after a runtime CPU check.

#include <limits>

#include "sinusnav/simd/kernels.hpp"

#if defined(__AVX2__)
#include <immintrin.h>
#endif

namespace sinusnav::simd::detail {

#if defined(__AVX2__)

bool avx2_compiled() { return true; }

double min_sq_distance_avx2(const double* xs, const double* ys, const double* zs, std::size_t n,
                            double px, double py, double pz) {
  const __m256d vpx = _mm256_set1_pd(px);
  const __m256d vpy = _mm256_set1_pd(py);
  const __m256d vpz = _mm256_set1_pd(pz);
  __m256d best = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), vpx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), vpy);
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(zs + i), vpz);
    // (dx*dx + dy*dy) + dz*dz, same association as the scalar loop
    const __m256d d = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)),
                                    _mm256_mul_pd(dz, dz));
    best = _mm256_min_pd(best, d);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, best);
  double out = lanes[0];
  for (int k = 1; k < 4; ++k) {
    if (lanes[k] < out) out = lanes[k];
  }
  if (i < n) {
    const double tail = min_sq_distance_scalar(xs + i, ys + i, zs + i, n - i, px, py, pz);
    if (tail < out) out = tail;
  }
  return out;
}

void threshold_u8_avx2(const std::uint8_t* in, std::uint8_t* out, std::size_t n,
                       std::uint8_t threshold) {
  // Unsigned a >= t  <=>  max(a, t) == a.
  const __m256i vt = _mm256_set1_epi8(static_cast<char>(threshold));
  const __m256i one = _mm256_set1_epi8(1);
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(in + i));
    const __m256i ge = _mm256_cmpeq_epi8(_mm256_max_epu8(v, vt), v);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i), _mm256_and_si256(ge, one));
  }
  threshold_u8_scalar(in + i, out + i, n - i, threshold);
}

#else

bool avx2_compiled() { return false; }

double min_sq_distance_avx2(const double* xs, const double* ys, const double* zs, std::size_t n,
                            double px, double py, double pz) {
  return min_sq_distance_scalar(xs, ys, zs, n, px, py, pz);
}

void threshold_u8_avx2(const std::uint8_t* in, std::uint8_t* out, std::size_t n,
                       std::uint8_t threshold) {
  threshold_u8_scalar(in, out, n, threshold);
}

#endif

}  // namespace sinusnav::simd::detail
