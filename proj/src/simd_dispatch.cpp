// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cstdlib>
#include <string>

#include "bspmm/errors.hpp"
#include "bspmm/simd/row_kernels.hpp"

namespace bspmm::simd {

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  if (name == "neon") return Isa::neon;
  throw ParameterError("unknown ISA '" + std::string(name) + "'");
}

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa detect_isa() noexcept {
  if (isa_available(Isa::avx2)) return Isa::avx2;
  if (isa_available(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

namespace {

Isa initial_isa() noexcept {
  if (const char* env = std::getenv("BSPMM_ISA")) {
    try {
      const Isa isa = parse_isa(env);
      if (isa_available(isa)) return isa;
    } catch (const ParameterError&) {
    }
  }
  return detect_isa();
}

std::atomic<Isa>& active() noexcept {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw ParameterError("ISA " + std::string(isa_name(isa)) + " is not supported on this CPU");
  }
  active().store(isa, std::memory_order_relaxed);
}

AxpyFn<float> axpy_f32(Isa isa) noexcept {
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::avx2: return &avx2::axpy_f32;
#endif
#if defined(__aarch64__)
    case Isa::neon: return &neon::axpy_f32;
#endif
    default: return &scalar::axpy<float>;
  }
}

AxpyFn<double> axpy_f64(Isa isa) noexcept {
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::avx2: return &avx2::axpy_f64;
#endif
#if defined(__aarch64__)
    case Isa::neon: return &neon::axpy_f64;
#endif
    default: return &scalar::axpy<double>;
  }
}

}  // namespace bspmm::simd
