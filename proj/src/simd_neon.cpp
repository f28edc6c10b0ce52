// SPDX-License-Identifier: Apache-2.0
#include "bspmm/simd/row_kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

namespace bspmm::simd::neon {

void axpy_f32(std::size_t n, float alpha, const float* x, float* y) {
  const float32x4_t a = vdupq_n_f32(alpha);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    // vmlaq would fuse on some cores; keep mul and add separate.
    const float32x4_t prod = vmulq_f32(a, vld1q_f32(x + j));
    vst1q_f32(y + j, vaddq_f32(vld1q_f32(y + j), prod));
  }
  for (; j < n; ++j) y[j] = y[j] + alpha * x[j];
}

void axpy_f64(std::size_t n, double alpha, const double* x, double* y) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) {
    const float64x2_t prod = vmulq_f64(a, vld1q_f64(x + j));
    vst1q_f64(y + j, vaddq_f64(vld1q_f64(y + j), prod));
  }
  for (; j < n; ++j) y[j] = y[j] + alpha * x[j];
}

}  // namespace bspmm::simd::neon
#endif
