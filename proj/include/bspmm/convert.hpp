// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "bspmm/matrix.hpp"

namespace bspmm {

/// COO to canonical CSR. Column ids are sorted within each row.
template <typename T>
CsrMatrix<T> coo_to_csr(const SparseTensorMatrix<T>& a) {
  const std::size_t rows = a.rows();
  const std::size_t nnz = a.nnz();
  std::vector<std::size_t> rpt(rows + 1, 0);
  for (std::size_t k = 0; k < nnz; ++k) {
    const index_t r = a.row_of(k);
    if (r >= rows || a.col_of(k) >= a.cols()) throw FormatError("index out of bounds");
    ++rpt[r + 1];
  }
  std::partial_sum(rpt.begin(), rpt.end(), rpt.begin());

  std::vector<std::size_t> cursor(rpt.begin(), rpt.end() - 1);
  std::vector<std::pair<index_t, T>> entries(nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    entries[cursor[a.row_of(k)]++] = {a.col_of(k), a.values()[k]};
  }
  for (std::size_t r = 0; r < rows; ++r) {
    std::sort(entries.begin() + static_cast<std::ptrdiff_t>(rpt[r]),
              entries.begin() + static_cast<std::ptrdiff_t>(rpt[r + 1]),
              [](const auto& x, const auto& y) { return x.first < y.first; });
  }

  std::vector<index_t> colids(nnz);
  std::vector<T> values(nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    colids[k] = entries[k].first;
    values[k] = entries[k].second;
  }
  return CsrMatrix<T>(rows, a.cols(), std::move(rpt), std::move(colids), std::move(values));
}

/// CSR to COO, entries emitted in row-major order.
template <typename T>
SparseTensorMatrix<T> csr_to_coo(const CsrMatrix<T>& a) {
  std::vector<index_t> ids;
  ids.reserve(2 * a.nnz());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t k = a.row_begin(r); k < a.row_end(r); ++k) {
      ids.push_back(static_cast<index_t>(r));
      ids.push_back(a.colids()[k]);
    }
  }
  return SparseTensorMatrix<T>(a.rows(), a.cols(), std::move(ids),
                               std::vector<T>(a.values().begin(), a.values().end()));
}

template <typename T>
CsrMatrix<T> transpose(const CsrMatrix<T>& a) {
  std::vector<std::size_t> rpt(a.cols() + 1, 0);
  for (index_t c : a.colids()) ++rpt[c + 1];
  std::partial_sum(rpt.begin(), rpt.end(), rpt.begin());
  std::vector<std::size_t> cursor(rpt.begin(), rpt.end() - 1);
  std::vector<index_t> colids(a.nnz());
  std::vector<T> values(a.nnz());
  // Walking rows in ascending order keeps each transposed row sorted.
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t k = a.row_begin(r); k < a.row_end(r); ++k) {
      const std::size_t dst = cursor[a.colids()[k]]++;
      colids[dst] = static_cast<index_t>(r);
      values[dst] = a.values()[k];
    }
  }
  return CsrMatrix<T>(a.cols(), a.rows(), std::move(rpt), std::move(colids), std::move(values));
}

template <typename T>
DenseMatrix<T> densify(const SparseTensorMatrix<T>& a) {
  DenseMatrix<T> d(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.nnz(); ++k) d(a.row_of(k), a.col_of(k)) = a.values()[k];
  return d;
}

template <typename T>
DenseMatrix<T> densify(const CsrMatrix<T>& a) {
  DenseMatrix<T> d(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t k = a.row_begin(r); k < a.row_end(r); ++k) d(r, a.colids()[k]) = a.values()[k];
  }
  return d;
}

template <typename T>
struct Triple {
  index_t row;
  index_t col;
  T value;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

/// Entries as (row, col, value) triples sorted by position.
template <typename T>
std::vector<Triple<T>> sorted_triples(const SparseTensorMatrix<T>& a) {
  std::vector<Triple<T>> out;
  out.reserve(a.nnz());
  for (std::size_t k = 0; k < a.nnz(); ++k) out.push_back({a.row_of(k), a.col_of(k), a.values()[k]});
  std::ranges::sort(out);
  return out;
}

}  // namespace bspmm
