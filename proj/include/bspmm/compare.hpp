// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "bspmm/errors.hpp"
#include "bspmm/matrix.hpp"

namespace bspmm {

/// max_ij |x - ref| / |ref|, with exact zeros in both counting as no error.
/// Returns +inf when ref is zero but x is not.
template <typename T>
double max_relative_error(DenseView<const T> x, DenseView<const T> ref) {
  if (x.rows() != ref.rows() || x.cols() != ref.cols()) throw ShapeError("compare: shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double d = std::abs(static_cast<double>(x(i, j)) - static_cast<double>(ref(i, j)));
      if (d == 0.0) continue;
      const double r = std::abs(static_cast<double>(ref(i, j)));
      worst = std::max(worst, r == 0.0 ? std::numeric_limits<double>::infinity() : d / r);
    }
  }
  return worst;
}

template <typename T>
double max_abs_error(DenseView<const T> x, DenseView<const T> ref) {
  if (x.rows() != ref.rows() || x.cols() != ref.cols()) throw ShapeError("compare: shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      worst = std::max(worst, std::abs(static_cast<double>(x(i, j)) - static_cast<double>(ref(i, j))));
    }
  }
  return worst;
}

}  // namespace bspmm
