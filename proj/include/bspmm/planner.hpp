// SPDX-License-Identifier: Apache-2.0
#pragma once

// Batch launch planning: lane-group width, scratchpad blocking case,
// blocking factor p, and the work units (emulated thread blocks) that
// together form one logical launch.

#include <cstddef>
#include <string_view>
#include <vector>

#include "bspmm/lane_group.hpp"
#include "json.hpp"

namespace bspmm {

enum class Layout { sparse_tensor, csr };

enum class BlockingCase {
  fits_whole,      // whole output of every item fits the scratchpad
  column_blocked,  // output split along columns into p blocks
  no_scratchpad,   // even one column is too tall; accumulate straight into the output
};

std::string_view to_string(Layout layout) noexcept;
std::string_view to_string(BlockingCase c) noexcept;

struct PlanInput {
  Layout layout = Layout::sparse_tensor;
  std::vector<std::size_t> batch_rows;  // m_A per item
  std::size_t dense_cols = 0;           // n_B
  std::size_t element_bytes = 4;
  std::size_t scratchpad_budget_bytes = 32768;
  std::size_t threads_per_block = 128;
};

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
  bool empty() const noexcept { return end <= begin; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// One emulated thread block. For the CSR layout `rows` is clamped to the
/// item's height and may be empty (redundant lane groups of smaller items).
struct WorkUnit {
  std::size_t item = 0;
  IndexRange cols;
  IndexRange rows;
  friend bool operator==(const WorkUnit&, const WorkUnit&) = default;
};

struct LaunchPlan {
  Layout layout = Layout::sparse_tensor;
  LaneGroup subwarp{1};
  BlockingCase blocking = BlockingCase::fits_whole;
  std::size_t p = 1;
  std::size_t block_width = 0;
  std::size_t groups_per_block = 0;  // CSR only
  std::size_t row_blocks_per_item = 1;

  std::vector<std::size_t> batch_rows;
  std::size_t dense_cols = 0;
  std::size_t element_bytes = 4;
  std::size_t scratchpad_budget_bytes = 32768;
  std::size_t threads_per_block = 128;

  std::vector<WorkUnit> work_units;
  std::size_t total_threads = 0;
  std::size_t total_blocks = 0;
  std::size_t launches = 1;

  std::size_t batch_size() const noexcept { return batch_rows.size(); }
  friend bool operator==(const LaunchPlan&, const LaunchPlan&) = default;
};

LaunchPlan plan_batch_st(const PlanInput& input);
LaunchPlan plan_batch_csr(const PlanInput& input);
/// Dispatches on input.layout.
LaunchPlan plan_batch(const PlanInput& input);

/// Scratchpad bytes the unit needs; 0 in the no_scratchpad case.
std::size_t scratch_bytes(const WorkUnit& unit, const LaunchPlan& plan);

nlohmann::json plan_to_json(const LaunchPlan& plan, bool with_work_units = true);

}  // namespace bspmm
