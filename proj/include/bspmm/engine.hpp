// SPDX-License-Identifier: Apache-2.0
#pragma once

// Executes a whole batch of SpMM tasks as one logical launch. Each work unit
// of the plan (one emulated thread block) owns a disjoint output region and
// a private scratchpad, so units run concurrently without synchronization
// and the result does not depend on scheduling.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <tbb/blocked_range.h>
#include <tbb/enumerable_thread_specific.h>
#include <tbb/global_control.h>
#include <tbb/info.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include "bspmm/errors.hpp"
#include "bspmm/matrix.hpp"
#include "bspmm/planner.hpp"
#include "bspmm/spmm.hpp"

namespace bspmm {

enum class Algorithm { baseline, swa_st, swa_csr };

inline std::string_view to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::baseline: return "baseline";
    case Algorithm::swa_st: return "swa-st";
    case Algorithm::swa_csr: return "swa-csr";
  }
  return "unknown";
}

inline Algorithm parse_algorithm(std::string_view name) {
  if (name == "baseline") return Algorithm::baseline;
  if (name == "swa-st" || name == "swa_st") return Algorithm::swa_st;
  if (name == "swa-csr" || name == "swa_csr") return Algorithm::swa_csr;
  throw ParameterError("unknown algorithm '" + std::string(name) + "'");
}

inline Layout layout_of(Algorithm a) noexcept {
  return a == Algorithm::swa_csr ? Layout::csr : Layout::sparse_tensor;
}

template <typename M>
inline constexpr bool is_csr_v = std::is_same_v<M, CsrMatrix<typename M::value_type>>;

/// Non-owning list of sparse matrices of one layout sharing n_B.
template <typename M>
struct SparseBatch {
  std::vector<const M*> items;
  std::size_t uniform_dense_cols = 0;

  std::size_t size() const noexcept { return items.size(); }
  const M& operator[](std::size_t i) const { return *items[i]; }
};

template <typename M>
SparseBatch<M> make_batch(std::span<const M> matrices, std::size_t dense_cols) {
  SparseBatch<M> batch{{}, dense_cols};
  batch.items.reserve(matrices.size());
  for (const M& m : matrices) batch.items.push_back(&m);
  return batch;
}

template <typename M>
std::vector<std::size_t> batch_rows(const SparseBatch<M>& batch) {
  std::vector<std::size_t> rows;
  rows.reserve(batch.size());
  for (const M* m : batch.items) rows.push_back(m->rows());
  return rows;
}

template <typename M>
struct BatchedSpmmRequest {
  using value_type = typename M::value_type;

  SparseBatch<M> batch;
  std::vector<DenseView<const value_type>> dense;  // one per item
  Algorithm algorithm = is_csr_v<M> ? Algorithm::swa_csr : Algorithm::swa_st;
};

/// Request whose dense inputs are consecutive row slices of one stacked matrix.
template <typename M>
BatchedSpmmRequest<M> request_from_stacked(SparseBatch<M> batch,
                                           DenseView<const typename M::value_type> stacked,
                                           Algorithm algorithm) {
  std::vector<std::size_t> rows;
  rows.reserve(batch.size());
  for (const M* m : batch.items) rows.push_back(m->cols());
  auto dense = split_rows(stacked, std::span<const std::size_t>(rows));
  return {std::move(batch), std::move(dense), algorithm};
}

template <typename M>
BatchedSpmmRequest<M> request_from_list(SparseBatch<M> batch,
                                        std::span<const DenseMatrix<typename M::value_type>> dense,
                                        Algorithm algorithm) {
  BatchedSpmmRequest<M> req{std::move(batch), {}, algorithm};
  req.dense.reserve(dense.size());
  for (const auto& d : dense) req.dense.push_back(d.view());
  return req;
}

template <typename M>
void validate_request(const BatchedSpmmRequest<M>& req) {
  if (req.batch.items.empty()) throw ShapeError("batch must be nonempty");
  if (req.dense.size() != req.batch.size()) {
    throw ShapeError("batch has " + std::to_string(req.batch.size()) + " items but " +
                     std::to_string(req.dense.size()) + " dense inputs");
  }
  if (is_csr_v<M> != (req.algorithm == Algorithm::swa_csr)) {
    throw ParameterError("algorithm " + std::string(to_string(req.algorithm)) +
                         " does not match the batch layout");
  }
  for (std::size_t i = 0; i < req.batch.size(); ++i) {
    if (req.dense[i].rows() != req.batch[i].cols()) {
      throw ShapeError("item " + std::to_string(i) + ": dense rows " +
                       std::to_string(req.dense[i].rows()) + " != sparse cols " +
                       std::to_string(req.batch[i].cols()));
    }
    if (req.dense[i].cols() != req.batch.uniform_dense_cols) {
      throw ShapeError("item " + std::to_string(i) + ": dense column count differs from n_B");
    }
  }
}

template <typename M>
PlanInput plan_input_for(const BatchedSpmmRequest<M>& req,
                         std::size_t budget_bytes = kDefaultScratchpadBytes,
                         std::size_t threads_per_block = 128) {
  return {layout_of(req.algorithm), batch_rows(req.batch), req.batch.uniform_dense_cols,
          sizeof(typename M::value_type), budget_bytes, threads_per_block};
}

/// Per-item descriptor table in one contiguous buffer, the stand-in for the
/// host-to-device pointer-array transfer before a batched launch.
template <typename M>
class PointerTable {
 public:
  using T = typename M::value_type;

  struct Entry {
    const M* sparse;
    const T* dense;
    std::size_t dense_ld;
    std::size_t rows;
    std::size_t cols;
    std::size_t nnz;
    std::size_t output_offset;  // into a packed rows x n_B output sequence
  };

  explicit PointerTable(const BatchedSpmmRequest<M>& req) : dense_cols_(req.batch.uniform_dense_cols) {
    entries_.reserve(req.batch.size());
    std::size_t offset = 0;
    for (std::size_t i = 0; i < req.batch.size(); ++i) {
      const M& a = req.batch[i];
      entries_.push_back({&a, req.dense[i].data(), req.dense[i].ld(), a.rows(), a.cols(), a.nnz(),
                          offset});
      offset += a.rows() * dense_cols_;
    }
    total_output_ = offset;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  const Entry& operator[](std::size_t i) const { return entries_[i]; }
  std::span<const Entry> entries() const noexcept { return entries_; }
  std::size_t total_output_elements() const noexcept { return total_output_; }

  /// True when offsets are the exclusive prefix sum of output sizes and all
  /// pointers are set.
  bool valid() const noexcept {
    std::size_t offset = 0;
    for (const Entry& e : entries_) {
      if (e.sparse == nullptr || (e.dense == nullptr && e.cols * dense_cols_ != 0)) return false;
      if (e.output_offset != offset) return false;
      offset += e.rows * dense_cols_;
    }
    return offset == total_output_;
  }

 private:
  std::size_t dense_cols_;
  std::size_t total_output_ = 0;
  std::vector<Entry> entries_;
};

template <typename M>
PointerTable<M> copy_pointer_table(const BatchedSpmmRequest<M>& req) {
  return PointerTable<M>(req);
}

struct LaunchCounter {
  std::atomic<std::uint64_t> logical_launches{0};
  std::atomic<std::uint64_t> work_units_executed{0};

  void record_launch(std::uint64_t n = 1) noexcept {
    logical_launches.fetch_add(n, std::memory_order_relaxed);
  }
  std::uint64_t launches() const noexcept { return logical_launches.load(); }
  std::uint64_t work_units() const noexcept { return work_units_executed.load(); }
  void reset() noexcept {
    logical_launches = 0;
    work_units_executed = 0;
  }
};

struct EngineOptions {
  std::size_t threads = 0;        // 0: one per hardware thread; may oversubscribe
  bool verify_disjoint = false;   // track ownership of every output entry
  KernelPath path = KernelPath::vectorized;
};

class BatchEngine {
 public:
  explicit BatchEngine(EngineOptions options = {})
      : options_(options),
        arena_(options.threads == 0 ? tbb::task_arena::automatic
                                    : static_cast<int>(options.threads)) {
    // The scheduler caps workers at the hardware concurrency unless raised.
    if (options.threads > static_cast<std::size_t>(tbb::info::default_concurrency())) {
      limit_.emplace(tbb::global_control::max_allowed_parallelism, options.threads);
    }
  }

  std::size_t threads() const { return static_cast<std::size_t>(arena_.max_concurrency()); }
  const EngineOptions& options() const noexcept { return options_; }
  LaunchCounter& counter() noexcept { return counter_; }
  const LaunchCounter& counter() const noexcept { return counter_; }

  /// Output entries written by more than one work unit in the last verified batched run.
  std::size_t last_conflicts() const noexcept { return last_conflicts_; }
  /// Distinct threads that executed work units in the last batched run.
  std::size_t last_workers() const noexcept { return last_workers_; }

  /// One non-batched kernel call. Baseline also counts its zero-fill launch.
  template <typename M>
  DenseMatrix<typename M::value_type> spmm(const M& a, DenseView<const typename M::value_type> b,
                                           Algorithm algorithm) {
    if (is_csr_v<M> != (algorithm == Algorithm::swa_csr)) {
      throw ParameterError("algorithm does not match sparse layout");
    }
    counter_.record_launch(algorithm == Algorithm::baseline ? 2 : 1);
    if constexpr (is_csr_v<M>) {
      return spmm_swa_csr(a, b, compute_subwarp(b.cols()), options_.path);
    } else if (algorithm == Algorithm::baseline) {
      return spmm_baseline(a, b, options_.path);
    } else {
      return spmm_swa_st(a, b, compute_subwarp(b.cols()), options_.path);
    }
  }

  template <typename M>
  std::vector<DenseMatrix<typename M::value_type>> sequential_spmm(const BatchedSpmmRequest<M>& req) {
    validate_request(req);
    std::vector<DenseMatrix<typename M::value_type>> out;
    out.reserve(req.batch.size());
    for (std::size_t i = 0; i < req.batch.size(); ++i) {
      out.push_back(spmm(req.batch[i], req.dense[i], req.algorithm));
    }
    return out;
  }

  template <typename M>
  std::vector<DenseMatrix<typename M::value_type>> batched_spmm(const BatchedSpmmRequest<M>& req,
                                                                const LaunchPlan& plan) {
    return batched_spmm(req, plan, copy_pointer_table(req));
  }

  template <typename M>
  std::vector<DenseMatrix<typename M::value_type>> batched_spmm(const BatchedSpmmRequest<M>& req,
                                                                const LaunchPlan& plan,
                                                                const PointerTable<M>& table) {
    using T = typename M::value_type;
    std::vector<DenseMatrix<T>> out;
    std::vector<DenseView<T>> views;
    out.reserve(req.batch.size());
    views.reserve(req.batch.size());
    for (std::size_t i = 0; i < req.batch.size(); ++i) {
      out.emplace_back(req.batch[i].rows(), req.batch.uniform_dense_cols);
      views.push_back(out.back().view());
    }
    batched_spmm_into(req, plan, table, views);
    return out;
  }

  /// Writes output i into outputs[i]. Every entry of every output is overwritten.
  template <typename M>
  void batched_spmm_into(const BatchedSpmmRequest<M>& req, const LaunchPlan& plan,
                         const PointerTable<M>& table,
                         std::span<const DenseView<typename M::value_type>> outputs) {
    using T = typename M::value_type;
    validate_request(req);
    check_plan(req, plan);
    if (outputs.size() != req.batch.size() || table.size() != req.batch.size()) {
      throw ShapeError("output/table count does not match batch size");
    }
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      if (outputs[i].rows() != req.batch[i].rows() || outputs[i].cols() != plan.dense_cols) {
        throw ShapeError("output " + std::to_string(i) + " has the wrong shape");
      }
    }

    std::unique_ptr<std::atomic<std::uint32_t>[]> owners;
    std::atomic<std::size_t> conflicts{0};
    if (options_.verify_disjoint) {
      owners = std::make_unique<std::atomic<std::uint32_t>[]>(table.total_output_elements());
    }

    counter_.record_launch();
    tbb::enumerable_thread_specific<Scratchpad<T>> pads(plan.scratchpad_budget_bytes);
    const auto& units = plan.work_units;
    arena_.execute([&] {
      tbb::parallel_for(tbb::blocked_range<std::size_t>(0, units.size()), [&](const auto& range) {
        Scratchpad<T>& pad = pads.local();
        for (std::size_t u = range.begin(); u != range.end(); ++u) {
          const WorkUnit& unit = units[u];
          const auto& e = table[unit.item];
          DenseView<const T> b(e.dense, e.cols, plan.dense_cols, e.dense_ld);
          run_unit(req.algorithm, *e.sparse, b, unit, plan, pad, outputs[unit.item]);
          if (owners) {
            claim(owners.get(), e.output_offset, plan.dense_cols, unit, static_cast<std::uint32_t>(u + 1),
                  conflicts);
          }
          counter_.work_units_executed.fetch_add(1, std::memory_order_relaxed);
        }
      });
    });
    last_conflicts_ = conflicts.load();
    last_workers_ = pads.size();
  }

 private:
  template <typename M>
  static void check_plan(const BatchedSpmmRequest<M>& req, const LaunchPlan& plan) {
    if (plan.layout != layout_of(req.algorithm)) {
      throw PlanError("plan layout does not match the request algorithm");
    }
    if (plan.dense_cols != req.batch.uniform_dense_cols) {
      throw PlanError("plan n_B does not match the request");
    }
    if (plan.batch_rows != batch_rows(req.batch)) {
      throw PlanError("plan item shapes do not match the request");
    }
    if (plan.element_bytes != sizeof(typename M::value_type)) {
      throw PlanError("plan element size does not match the request precision");
    }
    for (const WorkUnit& u : plan.work_units) {
      if (u.item >= req.batch.size() || u.cols.end > plan.dense_cols ||
          u.rows.end > req.batch[u.item].rows()) {
        throw PlanError("work unit outside its item");
      }
    }
  }

  template <typename M, typename T>
  void run_unit(Algorithm algorithm, const M& a, DenseView<const T> b, const WorkUnit& unit,
                const LaunchPlan& plan, Scratchpad<T>& pad, DenseView<T> out) const {
    if (unit.rows.empty() || unit.cols.empty()) return;  // redundant lane groups exit at once
    DenseView<T> region = out.row_slice(unit.rows.begin, unit.rows.size())
                              .col_slice(unit.cols.begin, unit.cols.size());
    const bool direct = plan.blocking == BlockingCase::no_scratchpad;
    DenseView<T> target;
    if (direct) {
      for (std::size_t r = 0; r < region.rows(); ++r) std::ranges::fill(region.row(r), T{0});
      target = region;
    } else {
      target = pad.acquire(region.rows(), region.cols());
    }

    if constexpr (is_csr_v<M>) {
      kernels::swa_csr_block(a, b, unit.rows.begin, unit.rows.end, unit.cols.begin, target,
                             plan.subwarp, options_.path);
    } else if (algorithm == Algorithm::baseline) {
      kernels::baseline_block(a, b, unit.cols.begin, target, options_.path);
    } else {
      kernels::swa_st_block(a, b, unit.cols.begin, target, plan.subwarp, options_.path);
    }

    if (!direct) {
      for (std::size_t r = 0; r < region.rows(); ++r) std::ranges::copy(target.row(r), region.row(r).begin());
    }
  }

  static void claim(std::atomic<std::uint32_t>* owners, std::size_t offset, std::size_t n_b,
                    const WorkUnit& unit, std::uint32_t id, std::atomic<std::size_t>& conflicts) {
    for (std::size_t r = unit.rows.begin; r < unit.rows.end; ++r) {
      for (std::size_t c = unit.cols.begin; c < unit.cols.end; ++c) {
        std::uint32_t expected = 0;
        auto& slot = owners[offset + r * n_b + c];
        if (!slot.compare_exchange_strong(expected, id) && expected != id) {
          conflicts.fetch_add(1, std::memory_order_relaxed);
        }
      }
    }
  }

  EngineOptions options_;
  std::optional<tbb::global_control> limit_;
  tbb::task_arena arena_;
  LaunchCounter counter_;
  std::size_t last_conflicts_ = 0;
  std::size_t last_workers_ = 0;
};

}  // namespace bspmm
