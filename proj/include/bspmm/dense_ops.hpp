// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "bspmm/errors.hpp"
#include "bspmm/matrix.hpp"
#include "bspmm/simd/row_kernels.hpp"

namespace bspmm::dense {

/// out = x w
template <typename T>
void matmul(DenseView<const T> x, DenseView<const T> w, DenseView<T> out) {
  if (x.cols() != w.rows() || out.rows() != x.rows() || out.cols() != w.cols()) {
    throw ShapeError("matmul: shapes do not conform");
  }
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto dst = out.row(i);
    std::ranges::fill(dst, T{0});
    for (std::size_t k = 0; k < x.cols(); ++k) {
      simd::axpy(dst.size(), x(i, k), w.row(k).data(), dst.data());
    }
  }
}

/// out = x^T g
template <typename T>
void matmul_tn(DenseView<const T> x, DenseView<const T> g, DenseView<T> out) {
  if (x.rows() != g.rows() || out.rows() != x.cols() || out.cols() != g.cols()) {
    throw ShapeError("matmul_tn: shapes do not conform");
  }
  for (std::size_t r = 0; r < out.rows(); ++r) std::ranges::fill(out.row(r), T{0});
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t k = 0; k < x.cols(); ++k) {
      simd::axpy(g.cols(), x(i, k), g.row(i).data(), out.row(k).data());
    }
  }
}

/// out += g w^T
template <typename T>
void matmul_nt_accumulate(DenseView<const T> g, DenseView<const T> w, DenseView<T> out) {
  if (g.cols() != w.cols() || out.rows() != g.rows() || out.cols() != w.rows()) {
    throw ShapeError("matmul_nt: shapes do not conform");
  }
  for (std::size_t i = 0; i < g.rows(); ++i) {
    for (std::size_t j = 0; j < w.rows(); ++j) {
      T acc{0};
      for (std::size_t k = 0; k < g.cols(); ++k) acc += g(i, k) * w(j, k);
      out(i, j) += acc;
    }
  }
}

/// Adds `bias` to every row.
template <typename T>
void add_row_broadcast(DenseView<T> out, std::span<const T> bias) {
  if (bias.size() != out.cols()) throw ShapeError("bias length must equal column count");
  for (std::size_t i = 0; i < out.rows(); ++i) {
    simd::axpy(out.cols(), T{1}, bias.data(), out.row(i).data());
  }
}

/// acc += x
template <typename T>
void accumulate(DenseView<T> acc, DenseView<const T> x) {
  if (acc.rows() != x.rows() || acc.cols() != x.cols()) throw ShapeError("accumulate: shape mismatch");
  for (std::size_t i = 0; i < x.rows(); ++i) {
    simd::axpy(x.cols(), T{1}, x.row(i).data(), acc.row(i).data());
  }
}

template <typename T>
std::vector<T> column_sums(DenseView<const T> x) {
  std::vector<T> out(x.cols(), T{0});
  for (std::size_t i = 0; i < x.rows(); ++i) simd::axpy(x.cols(), T{1}, x.row(i).data(), out.data());
  return out;
}

}  // namespace bspmm::dense
