// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bspmm/matrix.hpp"

namespace bspmm {

using Rng = std::mt19937_64;

/// Uniform in [0, 1), exactly representable in T.
template <typename T>
T unit_uniform(Rng& rng) {
  if constexpr (std::is_same_v<T, float>) {
    return static_cast<float>(rng() >> 40) * 0x1p-24f;
  } else {
    return static_cast<double>(rng() >> 11) * 0x1p-53;
  }
}

namespace detail {

// Floyd's sampling of `count` distinct values from [0, n), excluding `skip`
// when skip < n. Returned in ascending order.
inline std::vector<index_t> sample_columns(Rng& rng, std::size_t n, std::size_t count,
                                           std::size_t skip) {
  const bool has_skip = skip < n;
  const std::size_t pool = has_skip ? n - 1 : n;
  std::vector<index_t> picked;
  picked.reserve(count);
  for (std::size_t j = pool - count; j < pool; ++j) {
    std::uniform_int_distribution<std::size_t> dist(0, j);
    auto t = static_cast<index_t>(dist(rng));
    if (std::ranges::find(picked, t) != picked.end()) t = static_cast<index_t>(j);
    picked.push_back(t);
  }
  if (has_skip) {
    for (auto& c : picked) {
      if (c >= skip) ++c;
    }
  }
  std::ranges::sort(picked);
  return picked;
}

template <typename T>
SparseTensorMatrix<T> assemble(std::size_t dim, std::vector<index_t> ids, std::vector<T> values,
                               bool shuffle, Rng& rng) {
  if (shuffle) {
    const std::size_t nnz = values.size();
    std::vector<std::size_t> order(nnz);
    for (std::size_t k = 0; k < nnz; ++k) order[k] = k;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<index_t> ids2(2 * nnz);
    std::vector<T> values2(nnz);
    for (std::size_t k = 0; k < nnz; ++k) {
      ids2[2 * k] = ids[2 * order[k]];
      ids2[2 * k + 1] = ids[2 * order[k] + 1];
      values2[k] = values[order[k]];
    }
    ids = std::move(ids2);
    values = std::move(values2);
  }
  return SparseTensorMatrix<T>(dim, dim, std::move(ids), std::move(values));
}

}  // namespace detail

/// Square dim x dim matrix with exactly nnz_per_row distinct columns per row,
/// values uniform in [0, 1). Deterministic in all four arguments.
template <typename T = float>
SparseTensorMatrix<T> random_sparse(std::size_t dim, std::size_t nnz_per_row, std::uint64_t seed,
                                    bool shuffle = true) {
  if (nnz_per_row > dim) {
    throw ParameterError("nnz_per_row (" + std::to_string(nnz_per_row) + ") exceeds dim (" +
                         std::to_string(dim) + ")");
  }
  Rng rng(seed);
  std::vector<index_t> ids;
  std::vector<T> values;
  ids.reserve(2 * dim * nnz_per_row);
  values.reserve(dim * nnz_per_row);
  for (std::size_t r = 0; r < dim; ++r) {
    for (index_t c : detail::sample_columns(rng, dim, nnz_per_row, dim)) {
      ids.push_back(static_cast<index_t>(r));
      ids.push_back(c);
      values.push_back(unit_uniform<T>(rng));
    }
  }
  return detail::assemble(dim, std::move(ids), std::move(values), shuffle, rng);
}

/// Graph adjacency: the self loop a_uu = 1 plus nnz_per_row - 1 sampled
/// off-diagonal neighbours per row.
template <typename T = float>
SparseTensorMatrix<T> random_adjacency(std::size_t dim, std::size_t nnz_per_row,
                                       std::uint64_t seed, bool shuffle = true) {
  if (nnz_per_row == 0 || nnz_per_row > dim) {
    throw ParameterError("adjacency needs 1 <= nnz_per_row <= dim");
  }
  Rng rng(seed);
  std::vector<index_t> ids;
  std::vector<T> values;
  for (std::size_t r = 0; r < dim; ++r) {
    ids.push_back(static_cast<index_t>(r));
    ids.push_back(static_cast<index_t>(r));
    values.push_back(T{1});
    for (index_t c : detail::sample_columns(rng, dim, nnz_per_row - 1, r)) {
      ids.push_back(static_cast<index_t>(r));
      ids.push_back(c);
      values.push_back(unit_uniform<T>(rng));
    }
  }
  return detail::assemble(dim, std::move(ids), std::move(values), shuffle, rng);
}

template <typename T = float>
DenseMatrix<T> random_dense(std::size_t rows, std::size_t cols, std::uint64_t seed,
                            T lo = T{0}, T hi = T{1}) {
  Rng rng(seed);
  DenseMatrix<T> m(rows, cols);
  for (T& x : m.data()) x = lo + (hi - lo) * unit_uniform<T>(rng);
  return m;
}

struct SizeRange {
  std::size_t min = 0;
  std::size_t max = 0;
  bool is_point() const noexcept { return min == max; }
};

/// Batch whose items sample dim and nnz/row uniformly from the given ranges.
/// nnz/row is clamped to the item's dim.
template <typename T = float>
std::vector<SparseTensorMatrix<T>> random_mixed_batch(std::size_t batch_size, SizeRange dim,
                                                      SizeRange nnz_per_row, std::uint64_t seed,
                                                      bool shuffle = true) {
  if (dim.min > dim.max || nnz_per_row.min > nnz_per_row.max || dim.min == 0) {
    throw ParameterError("invalid dim or nnz/row range");
  }
  if (nnz_per_row.min > dim.min) throw ParameterError("nnz/row range exceeds smallest dim");
  Rng rng(seed);
  std::vector<SparseTensorMatrix<T>> out;
  out.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::size_t d = std::uniform_int_distribution<std::size_t>(dim.min, dim.max)(rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(
        nnz_per_row.min, std::min(nnz_per_row.max, d))(rng);
    out.push_back(random_sparse<T>(d, n, rng(), shuffle));
  }
  return out;
}

}  // namespace bspmm
