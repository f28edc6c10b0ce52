// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "bspmm/errors.hpp"

namespace bspmm {

using index_t = std::uint32_t;

enum class Precision { single, dbl };

template <typename T>
inline constexpr Precision precision_of =
    std::is_same_v<T, float> ? Precision::single : Precision::dbl;

namespace detail {
inline std::atomic<std::size_t> dense_allocations{0};
}

/// Number of dense buffers allocated so far in this process. Used to check
/// that reshapes and row slicing stay metadata-only.
inline std::size_t dense_allocation_count() noexcept {
  return detail::dense_allocations.load(std::memory_order_relaxed);
}

/// Non-owning row-major view with an explicit leading dimension.
template <typename T>
class DenseView {
 public:
  using value_type = std::remove_const_t<T>;

  DenseView() = default;
  DenseView(T* data, std::size_t rows, std::size_t cols, std::size_t ld)
      : data_(data), rows_(rows), cols_(cols), ld_(ld) {}
  DenseView(T* data, std::size_t rows, std::size_t cols)
      : DenseView(data, rows, cols, cols) {}

  template <typename U>
    requires(std::is_const_v<T> && std::is_same_v<const U, T>)
  DenseView(DenseView<U> other)  // NOLINT(google-explicit-constructor)
      : DenseView(other.data(), other.rows(), other.cols(), other.ld()) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t ld() const noexcept { return ld_; }
  T* data() const noexcept { return data_; }

  T& operator()(std::size_t r, std::size_t c) const { return data_[r * ld_ + c]; }
  std::span<T> row(std::size_t r) const { return {data_ + r * ld_, cols_}; }

  DenseView row_slice(std::size_t first, std::size_t count) const {
    return {data_ + first * ld_, count, cols_, ld_};
  }
  DenseView col_slice(std::size_t first, std::size_t count) const {
    return {data_ + first, rows_, count, ld_};
  }

 private:
  T* data_ = nullptr;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t ld_ = 0;
};

/// Owning row-major dense matrix; zero-initialized on construction.
template <typename T>
class DenseMatrix {
  static_assert(std::is_floating_point_v<T>);

 public:
  using value_type = T;
  static constexpr Precision precision = precision_of<T>;

  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, T{0}) {
    detail::dense_allocations.fetch_add(1, std::memory_order_relaxed);
  }
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
      throw ShapeError("dense data length " + std::to_string(data_.size()) +
                       " != " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    detail::dense_allocations.fetch_add(1, std::memory_order_relaxed);
  }
  /// Deep copy of a (possibly strided) view.
  explicit DenseMatrix(DenseView<const T> v) : DenseMatrix(v.rows(), v.cols()) {
    for (std::size_t r = 0; r < rows_; ++r) {
      std::ranges::copy(v.row(r), data_.begin() + static_cast<std::ptrdiff_t>(r * cols_));
    }
  }

  DenseMatrix(const DenseMatrix& o) : rows_(o.rows_), cols_(o.cols_), data_(o.data_) {
    detail::dense_allocations.fetch_add(1, std::memory_order_relaxed);
  }
  DenseMatrix& operator=(const DenseMatrix& o) {
    if (this != &o) {
      rows_ = o.rows_;
      cols_ = o.cols_;
      data_ = o.data_;
      detail::dense_allocations.fetch_add(1, std::memory_order_relaxed);
    }
    return *this;
  }
  DenseMatrix(DenseMatrix&&) noexcept = default;
  DenseMatrix& operator=(DenseMatrix&&) noexcept = default;

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  DenseView<T> view() noexcept { return {data_.data(), rows_, cols_}; }
  DenseView<const T> view() const noexcept { return {data_.data(), rows_, cols_}; }
  DenseView<const T> cview() const noexcept { return view(); }

  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// Split a stacked matrix into consecutive per-item row slices. No copies.
template <typename T>
std::vector<DenseView<T>> split_rows(DenseView<T> stacked,
                                     std::span<const std::size_t> rows_per_item) {
  std::vector<DenseView<T>> out;
  out.reserve(rows_per_item.size());
  std::size_t first = 0;
  for (std::size_t rows : rows_per_item) {
    if (first + rows > stacked.rows()) {
      throw ShapeError("row slices exceed stacked matrix height");
    }
    out.push_back(stacked.row_slice(first, rows));
    first += rows;
  }
  return out;
}

/// COO-style sparse matrix: interleaved (row, col) pairs plus values, in any order.
template <typename T>
class SparseTensorMatrix {
 public:
  using value_type = T;

  SparseTensorMatrix() = default;
  SparseTensorMatrix(std::size_t rows, std::size_t cols, std::vector<index_t> ids,
                     std::vector<T> values)
      : rows_(rows), cols_(cols), ids_(std::move(ids)), values_(std::move(values)) {
    validate();
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const index_t> ids() const noexcept { return ids_; }
  std::span<const T> values() const noexcept { return values_; }

  index_t row_of(std::size_t k) const { return ids_[2 * k]; }
  index_t col_of(std::size_t k) const { return ids_[2 * k + 1]; }

 private:
  void validate() const {
    if (ids_.size() != 2 * values_.size()) {
      throw FormatError("ids length must be twice the values length");
    }
    std::vector<std::uint64_t> keys;
    keys.reserve(values_.size());
    for (std::size_t k = 0; k < values_.size(); ++k) {
      const index_t r = ids_[2 * k];
      const index_t c = ids_[2 * k + 1];
      if (r >= rows_ || c >= cols_) {
        throw FormatError("entry " + std::to_string(k) + " at (" + std::to_string(r) + ", " +
                          std::to_string(c) + ") is outside " + std::to_string(rows_) + "x" +
                          std::to_string(cols_));
      }
      keys.push_back((std::uint64_t{r} << 32) | c);
    }
    std::ranges::sort(keys);
    if (std::ranges::adjacent_find(keys) != keys.end()) {
      throw FormatError("duplicate (row, col) entry");
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<index_t> ids_;
  std::vector<T> values_;
};

/// Compressed sparse row matrix in canonical form (sorted column ids per row).
template <typename T>
class CsrMatrix {
 public:
  using value_type = T;

  CsrMatrix() : rpt_{0} {}
  CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> rpt,
            std::vector<index_t> colids, std::vector<T> values)
      : rows_(rows),
        cols_(cols),
        rpt_(std::move(rpt)),
        colids_(std::move(colids)),
        values_(std::move(values)) {
    validate();
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const std::size_t> rpt() const noexcept { return rpt_; }
  std::span<const index_t> colids() const noexcept { return colids_; }
  std::span<const T> values() const noexcept { return values_; }

  std::size_t row_begin(std::size_t r) const { return rpt_[r]; }
  std::size_t row_end(std::size_t r) const { return rpt_[r + 1]; }

 private:
  void validate() const {
    if (rpt_.size() != rows_ + 1) throw FormatError("rpt length must be rows + 1");
    if (colids_.size() != values_.size()) throw FormatError("colids/values length mismatch");
    if (rpt_.front() != 0) throw FormatError("rpt[0] must be 0");
    if (rpt_.back() != values_.size()) throw FormatError("rpt[rows] must equal nnz");
    for (std::size_t r = 0; r < rows_; ++r) {
      if (rpt_[r + 1] < rpt_[r]) throw FormatError("rpt must be non-decreasing");
      for (std::size_t k = rpt_[r]; k < rpt_[r + 1]; ++k) {
        if (colids_[k] >= cols_) throw FormatError("column index out of bounds");
        if (k > rpt_[r] && colids_[k] <= colids_[k - 1]) {
          throw FormatError("column ids of row " + std::to_string(r) +
                            " are not strictly increasing");
        }
      }
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> rpt_;
  std::vector<index_t> colids_;
  std::vector<T> values_;
};

}  // namespace bspmm
