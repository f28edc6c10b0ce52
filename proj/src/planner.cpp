// SPDX-License-Identifier: Apache-2.0
#include "bspmm/planner.hpp"

#include <algorithm>
#include <string>

#include "bspmm/errors.hpp"

namespace bspmm {

std::string_view to_string(Layout layout) noexcept {
  return layout == Layout::csr ? "csr" : "sparse_tensor";
}

std::string_view to_string(BlockingCase c) noexcept {
  switch (c) {
    case BlockingCase::fits_whole: return "fits_whole";
    case BlockingCase::column_blocked: return "column_blocked";
    case BlockingCase::no_scratchpad: return "no_scratchpad";
  }
  return "unknown";
}

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

void validate(const PlanInput& in, Layout expected) {
  if (in.layout != expected) {
    throw ParameterError("plan input layout is " + std::string(to_string(in.layout)) +
                         ", expected " + std::string(to_string(expected)));
  }
  if (in.batch_rows.empty()) throw ParameterError("batch must be nonempty");
  if (in.dense_cols == 0) throw ParameterError("dense_cols must be >= 1");
  if (in.element_bytes == 0) throw ParameterError("element_bytes must be >= 1");
  if (in.scratchpad_budget_bytes == 0) throw ParameterError("scratchpad budget must be >= 1");
  if (in.threads_per_block == 0 || in.threads_per_block % 32 != 0) {
    throw ParameterError("threads_per_block must be a positive multiple of 32");
  }
}

LaunchPlan skeleton(const PlanInput& in) {
  LaunchPlan plan;
  plan.layout = in.layout;
  plan.subwarp = compute_subwarp(in.dense_cols);
  plan.batch_rows = in.batch_rows;
  plan.dense_cols = in.dense_cols;
  plan.element_bytes = in.element_bytes;
  plan.scratchpad_budget_bytes = in.scratchpad_budget_bytes;
  plan.threads_per_block = in.threads_per_block;
  return plan;
}

IndexRange column_block(const LaunchPlan& plan, std::size_t q) {
  const std::size_t begin = q * plan.block_width;
  return {begin, std::min(plan.dense_cols, begin + plan.block_width)};
}

}  // namespace

LaunchPlan plan_batch_st(const PlanInput& in) {
  validate(in, Layout::sparse_tensor);
  LaunchPlan plan = skeleton(in);
  const std::size_t max_rows = *std::ranges::max_element(in.batch_rows);
  const std::size_t budget = in.scratchpad_budget_bytes;
  const std::size_t eb = in.element_bytes;
  const std::size_t width = plan.subwarp.width();

  if (max_rows * in.dense_cols * eb <= budget) {
    plan.blocking = BlockingCase::fits_whole;
    plan.block_width = in.dense_cols;
  } else if (max_rows * eb <= budget) {
    plan.blocking = BlockingCase::column_blocked;
    const std::size_t fit = budget / (max_rows * eb);
    plan.block_width = std::max<std::size_t>(1, fit / width * width);
  } else {
    plan.blocking = BlockingCase::no_scratchpad;
    plan.block_width = in.dense_cols;
  }
  plan.p = ceil_div(in.dense_cols, plan.block_width);

  plan.work_units.reserve(in.batch_rows.size() * plan.p);
  for (std::size_t item = 0; item < in.batch_rows.size(); ++item) {
    for (std::size_t q = 0; q < plan.p; ++q) {
      plan.work_units.push_back({item, column_block(plan, q), {0, in.batch_rows[item]}});
    }
  }
  plan.total_blocks = plan.work_units.size();
  plan.total_threads = plan.total_blocks * in.threads_per_block;
  return plan;
}

LaunchPlan plan_batch_csr(const PlanInput& in) {
  validate(in, Layout::csr);
  LaunchPlan plan = skeleton(in);
  const std::size_t max_rows = *std::ranges::max_element(in.batch_rows);
  const std::size_t budget = in.scratchpad_budget_bytes;
  const std::size_t eb = in.element_bytes;
  const std::size_t width = plan.subwarp.width();

  plan.groups_per_block = in.threads_per_block / width;
  const std::size_t scratch_per_block = plan.groups_per_block * in.dense_cols * eb;
  if (scratch_per_block <= budget) {
    plan.blocking = BlockingCase::fits_whole;
    plan.block_width = in.dense_cols;
  } else if (plan.groups_per_block * eb <= budget) {
    plan.blocking = BlockingCase::column_blocked;
    plan.block_width = ceil_div(in.dense_cols, ceil_div(scratch_per_block, budget));
    // The last column block of ceil(n_B / p) may not fit when the budget is
    // not a multiple of the per-column cost; shrink until it does.
    while (plan.groups_per_block * plan.block_width * eb > budget) --plan.block_width;
  } else {
    plan.blocking = BlockingCase::no_scratchpad;
    plan.block_width = in.dense_cols;
  }
  plan.p = ceil_div(in.dense_cols, plan.block_width);

  plan.row_blocks_per_item = ceil_div(max_rows * width, in.threads_per_block);
  plan.work_units.reserve(in.batch_rows.size() * plan.row_blocks_per_item * plan.p);
  for (std::size_t item = 0; item < in.batch_rows.size(); ++item) {
    const std::size_t rows = in.batch_rows[item];
    for (std::size_t rb = 0; rb < plan.row_blocks_per_item; ++rb) {
      const std::size_t r0 = std::min(rows, rb * plan.groups_per_block);
      const std::size_t r1 = std::min(rows, (rb + 1) * plan.groups_per_block);
      for (std::size_t q = 0; q < plan.p; ++q) {
        plan.work_units.push_back({item, column_block(plan, q), {r0, r1}});
      }
    }
  }
  plan.total_blocks = plan.work_units.size();
  plan.total_threads = max_rows * width * in.batch_rows.size() * plan.p;
  return plan;
}

LaunchPlan plan_batch(const PlanInput& input) {
  return input.layout == Layout::csr ? plan_batch_csr(input) : plan_batch_st(input);
}

std::size_t scratch_bytes(const WorkUnit& unit, const LaunchPlan& plan) {
  if (plan.blocking == BlockingCase::no_scratchpad) return 0;
  if (plan.layout == Layout::csr) {
    return plan.groups_per_block * plan.block_width * plan.element_bytes;
  }
  return plan.batch_rows.at(unit.item) * plan.block_width * plan.element_bytes;
}

nlohmann::json plan_to_json(const LaunchPlan& plan, bool with_work_units) {
  nlohmann::json j;
  j["layout"] = to_string(plan.layout);
  j["case"] = to_string(plan.blocking);
  j["subwarp"] = plan.subwarp.width();
  j["p"] = plan.p;
  j["block_width"] = plan.block_width;
  j["dense_cols"] = plan.dense_cols;
  j["batch_size"] = plan.batch_size();
  j["element_bytes"] = plan.element_bytes;
  j["scratchpad_budget_bytes"] = plan.scratchpad_budget_bytes;
  j["threads_per_block"] = plan.threads_per_block;
  if (plan.layout == Layout::csr) {
    j["groups_per_block"] = plan.groups_per_block;
    j["row_blocks_per_item"] = plan.row_blocks_per_item;
  }
  j["total_blocks"] = plan.total_blocks;
  j["total_threads"] = plan.total_threads;
  j["launches"] = plan.launches;
  if (with_work_units) {
    auto& units = j["work_units"] = nlohmann::json::array();
    for (const WorkUnit& u : plan.work_units) {
      units.push_back({{"item", u.item},
                       {"cols", {u.cols.begin, u.cols.end}},
                       {"rows", {u.rows.begin, u.rows.end}},
                       {"scratch_bytes", scratch_bytes(u, plan)}});
    }
  }
  return j;
}

}  // namespace bspmm
