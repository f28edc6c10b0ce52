// SPDX-License-Identifier: Apache-2.0
#pragma once

// Row update y[0:n) += alpha * x[0:n), the inner loop of every kernel here.
//
// The scalar versions are the reference. Vector versions perform the same
// multiply then add per element (no fused multiply-add), so every backend
// produces bit-identical results; tests check this.

#include <cstddef>
#include <string_view>
#include <type_traits>

namespace bspmm::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa) noexcept;
Isa parse_isa(std::string_view name);

bool isa_available(Isa isa) noexcept;
/// Best ISA supported by the running CPU.
Isa detect_isa() noexcept;
/// ISA used by axpy(); starts as BSPMM_ISA from the environment if set, else detect_isa().
Isa active_isa() noexcept;
/// Throws ParameterError if the CPU lacks `isa`.
void set_active_isa(Isa isa);

template <typename T>
using AxpyFn = void (*)(std::size_t n, T alpha, const T* x, T* y);

AxpyFn<float> axpy_f32(Isa isa) noexcept;
AxpyFn<double> axpy_f64(Isa isa) noexcept;

namespace scalar {

template <typename T>
inline void axpy(std::size_t n, T alpha, const T* x, T* y) {
  for (std::size_t j = 0; j < n; ++j) y[j] = y[j] + alpha * x[j];
}

/// One lane group of `width` lanes sweeping n columns: lane l touches
/// columns l, l + width, l + 2*width, ... Each column is updated exactly once.
template <typename T>
inline void lane_strided_axpy(std::size_t width, std::size_t n, T alpha, const T* x, T* y) {
  for (std::size_t lane = 0; lane < width; ++lane) {
    for (std::size_t j = lane; j < n; j += width) y[j] = y[j] + alpha * x[j];
  }
}

}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
void axpy_f32(std::size_t n, float alpha, const float* x, float* y);
void axpy_f64(std::size_t n, double alpha, const double* x, double* y);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
void axpy_f32(std::size_t n, float alpha, const float* x, float* y);
void axpy_f64(std::size_t n, double alpha, const double* x, double* y);
}  // namespace neon
#endif

/// Dispatched row update through the active ISA.
template <typename T>
inline void axpy(std::size_t n, T alpha, const T* x, T* y) {
  if constexpr (std::is_same_v<T, float>) {
    axpy_f32(active_isa())(n, alpha, x, y);
  } else {
    axpy_f64(active_isa())(n, alpha, x, y);
  }
}

}  // namespace bspmm::simd
