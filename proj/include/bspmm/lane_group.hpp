// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstddef>
#include <string>

#include "bspmm/errors.hpp"

namespace bspmm {

inline constexpr std::size_t kMaxLaneGroupWidth = 32;

/// Width of the lane group ("sub-warp") assigned to one nonzero or row.
class LaneGroup {
 public:
  explicit LaneGroup(std::size_t width) : width_(width) {
    if (width == 0 || width > kMaxLaneGroupWidth || !std::has_single_bit(width)) {
      throw ParameterError("lane group width must be a power of two in [1, 32], got " +
                           std::to_string(width));
    }
  }
  std::size_t width() const noexcept { return width_; }
  friend bool operator==(LaneGroup, LaneGroup) = default;

 private:
  std::size_t width_;
};

/// 32 lanes when n_b > 16, else the smallest power of two >= n_b.
inline LaneGroup compute_subwarp(std::size_t n_b) {
  if (n_b == 0) throw ParameterError("dense column count must be >= 1");
  if (n_b > 16) return LaneGroup(kMaxLaneGroupWidth);
  return LaneGroup(std::bit_ceil(n_b));
}

}  // namespace bspmm
