// SPDX-License-Identifier: Apache-2.0
#pragma once

// Single-matrix SpMM kernels on an emulated lane-group thread model.
//
// A lane group of `width` lanes is assigned to one nonzero (SparseTensor
// layout) or one row (CSR layout). Lane l of a group updates output columns
// l, l + width, l + 2*width, ... Accumulation into an output entry follows
// ascending nonzero order (SparseTensor) or CSR storage order, which makes
// every kernel bit-reproducible.
//
// KernelPath::reference runs the lanes one after another with scalar code.
// KernelPath::vectorized runs all lanes of a group in lockstep through the
// dispatched SIMD row update. Both paths give identical bits.

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "bspmm/convert.hpp"
#include "bspmm/errors.hpp"
#include "bspmm/lane_group.hpp"
#include "bspmm/matrix.hpp"
#include "bspmm/simd/row_kernels.hpp"

namespace bspmm {

inline constexpr std::size_t kDefaultScratchpadBytes = 32768;

/// Per-work-unit fast buffer standing in for GPU shared memory.
template <typename T>
class Scratchpad {
 public:
  explicit Scratchpad(std::size_t capacity_bytes = kDefaultScratchpadBytes)
      : capacity_bytes_(capacity_bytes), buffer_(capacity_bytes / sizeof(T)) {}

  std::size_t capacity_bytes() const noexcept { return capacity_bytes_; }
  std::size_t used_bytes() const noexcept { return used_bytes_; }

  /// Zero-filled rows x cols region. Exceeding capacity is a planning bug.
  DenseView<T> acquire(std::size_t rows, std::size_t cols) {
    const std::size_t bytes = rows * cols * sizeof(T);
    if (bytes > capacity_bytes_) {
      throw InternalError("scratchpad overflow: " + std::to_string(bytes) + " > " +
                          std::to_string(capacity_bytes_) + " bytes");
    }
    used_bytes_ = bytes;
    std::fill_n(buffer_.begin(), rows * cols, T{0});
    return {buffer_.data(), rows, cols};
  }

 private:
  std::size_t capacity_bytes_;
  std::size_t used_bytes_ = 0;
  std::vector<T> buffer_;
};

enum class KernelPath { reference, vectorized };

/// Records which lane groups wrote each output entry.
class WriteLog {
 public:
  WriteLog(std::size_t rows, std::size_t cols) : cols_(cols), writers_(rows * cols) {}

  void record(std::size_t row, std::size_t col, std::size_t group) {
    auto& w = writers_[row * cols_ + col];
    if (std::ranges::find(w, group) == w.end()) w.push_back(group);
  }
  void record_span(std::size_t row, std::size_t col_begin, std::size_t n, std::size_t group) {
    for (std::size_t j = 0; j < n; ++j) record(row, col_begin + j, group);
  }
  const std::vector<std::size_t>& writers(std::size_t row, std::size_t col) const {
    return writers_[row * cols_ + col];
  }
  std::size_t max_writers() const {
    std::size_t m = 0;
    for (const auto& w : writers_) m = std::max(m, w.size());
    return m;
  }

 private:
  std::size_t cols_;
  std::vector<std::vector<std::size_t>> writers_;
};

namespace kernels {

template <typename T>
inline void group_update(KernelPath path, std::size_t width, std::size_t n, T alpha, const T* x,
                         T* y) {
  if (path == KernelPath::reference) {
    simd::scalar::lane_strided_axpy(width, n, alpha, x, y);
  } else {
    simd::axpy(n, alpha, x, y);
  }
}

/// TensorFlow-style baseline restricted to columns [col_begin, col_begin + out.cols()):
/// one thread per (nonzero, column), walked in (k, j) ascending order.
template <typename T>
void baseline_block(const SparseTensorMatrix<T>& a, DenseView<const T> b, std::size_t col_begin,
                    DenseView<T> out, KernelPath path = KernelPath::vectorized) {
  const std::size_t n = out.cols();
  for (std::size_t k = 0; k < a.nnz(); ++k) {
    const T val = a.values()[k];
    const T* brow = b.row(a.col_of(k)).data() + col_begin;
    T* crow = out.row(a.row_of(k)).data();
    if (path == KernelPath::reference) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = crow[j] + val * brow[j];
    } else {
      simd::axpy(n, val, brow, crow);
    }
  }
}

/// Sub-warp-assigned SpMM, SparseTensor layout: one lane group per nonzero.
/// Lane groups run in ascending nonzero order, serializing the atomic adds.
template <typename T>
void swa_st_block(const SparseTensorMatrix<T>& a, DenseView<const T> b, std::size_t col_begin,
                  DenseView<T> out, LaneGroup group, KernelPath path = KernelPath::vectorized,
                  WriteLog* log = nullptr) {
  const std::size_t n = out.cols();
  for (std::size_t nzid = 0; nzid < a.nnz(); ++nzid) {
    const index_t rid = a.row_of(nzid);
    const index_t cid = a.col_of(nzid);
    group_update(path, group.width(), n, a.values()[nzid], b.row(cid).data() + col_begin,
                 out.row(rid).data());
    if (log) log->record_span(rid, col_begin, n, nzid);
  }
}

/// Sub-warp-assigned SpMM, CSR layout: one lane group per row in
/// [row_begin, row_end). `out` row 0 corresponds to row_begin.
template <typename T>
void swa_csr_block(const CsrMatrix<T>& a, DenseView<const T> b, std::size_t row_begin,
                   std::size_t row_end, std::size_t col_begin, DenseView<T> out, LaneGroup group,
                   KernelPath path = KernelPath::vectorized, WriteLog* log = nullptr) {
  const std::size_t n = out.cols();
  for (std::size_t rid = row_begin; rid < row_end; ++rid) {
    T* crow = out.row(rid - row_begin).data();
    for (std::size_t nzid = a.row_begin(rid); nzid < a.row_end(rid); ++nzid) {
      group_update(path, group.width(), n, a.values()[nzid],
                   b.row(a.colids()[nzid]).data() + col_begin, crow);
    }
    if (log && a.row_end(rid) > a.row_begin(rid)) log->record_span(rid, col_begin, n, rid);
  }
}

}  // namespace kernels

namespace detail {
inline void check_inner(std::size_t a_cols, std::size_t b_rows, const char* op) {
  if (a_cols != b_rows) {
    throw ShapeError(std::string(op) + ": inner dimensions differ (" + std::to_string(a_cols) +
                     " vs " + std::to_string(b_rows) + ")");
  }
}
}  // namespace detail

template <typename T>
DenseMatrix<T> spmm_baseline(const SparseTensorMatrix<T>& a, DenseView<const T> b,
                             KernelPath path = KernelPath::vectorized) {
  detail::check_inner(a.cols(), b.rows(), "spmm_baseline");
  DenseMatrix<T> c(a.rows(), b.cols());
  kernels::baseline_block(a, b, 0, c.view(), path);
  return c;
}

template <typename T>
DenseMatrix<T> spmm_swa_st(const SparseTensorMatrix<T>& a, DenseView<const T> b, LaneGroup group,
                           KernelPath path = KernelPath::vectorized, WriteLog* log = nullptr) {
  detail::check_inner(a.cols(), b.rows(), "spmm_swa_st");
  DenseMatrix<T> c(a.rows(), b.cols());
  kernels::swa_st_block(a, b, 0, c.view(), group, path, log);
  return c;
}

template <typename T>
DenseMatrix<T> spmm_swa_csr(const CsrMatrix<T>& a, DenseView<const T> b, LaneGroup group,
                            KernelPath path = KernelPath::vectorized, WriteLog* log = nullptr) {
  detail::check_inner(a.cols(), b.rows(), "spmm_swa_csr");
  DenseMatrix<T> c(a.rows(), b.cols());
  kernels::swa_csr_block(a, b, 0, a.rows(), 0, c.view(), group, path, log);
  return c;
}

/// Dense triple loop accumulated in double and rounded to T. Ground truth for
/// every equivalence check.
template <typename T>
DenseMatrix<T> gemm_oracle(DenseView<const T> a, DenseView<const T> b) {
  detail::check_inner(a.cols(), b.rows(), "gemm_oracle");
  DenseMatrix<T> c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) {
        acc += static_cast<double>(a(i, k)) * static_cast<double>(b(k, j));
      }
      c(i, j) = static_cast<T>(acc);
    }
  }
  return c;
}

/// Gradient w.r.t. the dense input of C = A B: A^T grad_C. Runs the CSR
/// kernel on the transposed pattern.
template <typename T>
DenseMatrix<T> spmm_grad_dense(const CsrMatrix<T>& a, DenseView<const T> grad_c,
                               KernelPath path = KernelPath::vectorized) {
  if (a.rows() != grad_c.rows()) {
    throw ShapeError("spmm_grad_dense: grad_c rows must equal A rows");
  }
  const CsrMatrix<T> at = transpose(a);
  return spmm_swa_csr(at, grad_c, compute_subwarp(std::max<std::size_t>(grad_c.cols(), 1)), path);
}

/// Gradient w.r.t. each stored value of A: grad_C[row_k] . B[col_k], in CSR order.
template <typename T>
std::vector<T> spmm_grad_values(const CsrMatrix<T>& a, DenseView<const T> b,
                                DenseView<const T> grad_c) {
  if (a.cols() != b.rows() || a.rows() != grad_c.rows() || b.cols() != grad_c.cols()) {
    throw ShapeError("spmm_grad_values: inconsistent shapes");
  }
  std::vector<T> out(a.nnz());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t k = a.row_begin(r); k < a.row_end(r); ++k) {
      double acc = 0.0;
      const auto g = grad_c.row(r);
      const auto x = b.row(a.colids()[k]);
      for (std::size_t j = 0; j < g.size(); ++j) {
        acc += static_cast<double>(g[j]) * static_cast<double>(x[j]);
      }
      out[k] = static_cast<T>(acc);
    }
  }
  return out;
}

}  // namespace bspmm
