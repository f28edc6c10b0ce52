// SPDX-License-Identifier: Apache-2.0
#include "bspmm/simd/row_kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace bspmm::simd::avx2 {

__attribute__((target("avx2"))) void axpy_f32(std::size_t n, float alpha, const float* x,
                                               float* y) {
  const __m256 a = _mm256_set1_ps(alpha);
  std::size_t j = 0;
  for (; j + 16 <= n; j += 16) {
    __m256 y0 = _mm256_loadu_ps(y + j);
    __m256 y1 = _mm256_loadu_ps(y + j + 8);
    y0 = _mm256_add_ps(y0, _mm256_mul_ps(a, _mm256_loadu_ps(x + j)));
    y1 = _mm256_add_ps(y1, _mm256_mul_ps(a, _mm256_loadu_ps(x + j + 8)));
    _mm256_storeu_ps(y + j, y0);
    _mm256_storeu_ps(y + j + 8, y1);
  }
  for (; j + 8 <= n; j += 8) {
    __m256 y0 = _mm256_loadu_ps(y + j);
    y0 = _mm256_add_ps(y0, _mm256_mul_ps(a, _mm256_loadu_ps(x + j)));
    _mm256_storeu_ps(y + j, y0);
  }
  for (; j < n; ++j) y[j] = y[j] + alpha * x[j];
}

__attribute__((target("avx2"))) void axpy_f64(std::size_t n, double alpha, const double* x,
                                               double* y) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    __m256d y0 = _mm256_loadu_pd(y + j);
    __m256d y1 = _mm256_loadu_pd(y + j + 4);
    y0 = _mm256_add_pd(y0, _mm256_mul_pd(a, _mm256_loadu_pd(x + j)));
    y1 = _mm256_add_pd(y1, _mm256_mul_pd(a, _mm256_loadu_pd(x + j + 4)));
    _mm256_storeu_pd(y + j, y0);
    _mm256_storeu_pd(y + j + 4, y1);
  }
  for (; j + 4 <= n; j += 4) {
    __m256d y0 = _mm256_loadu_pd(y + j);
    y0 = _mm256_add_pd(y0, _mm256_mul_pd(a, _mm256_loadu_pd(x + j)));
    _mm256_storeu_pd(y + j, y0);
  }
  for (; j < n; ++j) y[j] = y[j] + alpha * x[j];
}

}  // namespace bspmm::simd::avx2
#endif
