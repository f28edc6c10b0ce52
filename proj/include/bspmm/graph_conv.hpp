// SPDX-License-Identifier: Apache-2.0
#pragma once

// Graph convolution layer Y[b] = sum_ch A[b][ch] (X[b] W[ch] + bias[ch]),
// per item (one kernel launch per operation and item) or batched over the
// mini-batch (one launch per operation and channel).

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "bspmm/convert.hpp"
#include "bspmm/dense_ops.hpp"
#include "bspmm/engine.hpp"
#include "bspmm/planner.hpp"

namespace bspmm {

template <typename T>
struct GraphConvInputs {
  std::size_t batch_size = 0;
  std::size_t channels = 0;
  std::size_t nodes = 0;  // m_X; every adjacency matrix is nodes x nodes
  /// adjacency[b][ch]; entries may alias one matrix across channels.
  std::vector<std::vector<std::shared_ptr<const SparseTensorMatrix<T>>>> adjacency;
  /// Stacked node features, (nodes * batch_size) x n_X.
  DenseMatrix<T> features;
  std::vector<DenseMatrix<T>> weights;  // [ch], n_X x n_W
  std::vector<std::vector<T>> bias;     // [ch], length n_W

  std::size_t feature_dim() const noexcept { return features.cols(); }
  std::size_t out_dim() const noexcept { return weights.empty() ? 0 : weights.front().cols(); }

  DenseView<const T> item_features(std::size_t b) const {
    return features.view().row_slice(b * nodes, nodes);
  }
};

struct GraphConvOptions {
  Algorithm algorithm = Algorithm::swa_st;
  std::size_t scratchpad_budget_bytes = kDefaultScratchpadBytes;
  std::size_t threads_per_block = 128;
};

template <typename T>
struct GraphConvGradients {
  DenseMatrix<T> grad_x;  // stacked like the features
  std::vector<DenseMatrix<T>> grad_w;
  std::vector<std::vector<T>> grad_bias;
};

template <typename T>
void validate(const GraphConvInputs<T>& in) {
  if (in.batch_size == 0 || in.channels == 0) throw ShapeError("batch size and channels must be >= 1");
  if (in.features.rows() != in.nodes * in.batch_size) {
    throw ShapeError("features must have nodes * batch_size rows");
  }
  if (in.adjacency.size() != in.batch_size) throw ShapeError("adjacency needs one row per item");
  for (const auto& per_item : in.adjacency) {
    if (per_item.size() != in.channels) throw ShapeError("adjacency needs one matrix per channel");
    for (const auto& a : per_item) {
      if (!a || a->rows() != in.nodes || a->cols() != in.nodes) {
        throw ShapeError("adjacency matrices must be nodes x nodes");
      }
    }
  }
  if (in.weights.size() != in.channels || in.bias.size() != in.channels) {
    throw ShapeError("weights and bias need one entry per channel");
  }
  for (std::size_t ch = 0; ch < in.channels; ++ch) {
    if (in.weights[ch].rows() != in.feature_dim() || in.weights[ch].cols() != in.out_dim()) {
      throw ShapeError("weights must all be n_X x n_W");
    }
    if (in.bias[ch].size() != in.out_dim()) throw ShapeError("bias length must be n_W");
  }
}

/// View of the stacked features as (nodes * batch) x n_X. Metadata only.
template <typename T>
DenseView<const T> reshape_stacked(const GraphConvInputs<T>& in) {
  return DenseView<const T>(in.features.data().data(), in.nodes * in.batch_size, in.feature_dim());
}

namespace detail {

// Per-(b, ch) CSR copies for the CSR algorithm, keyed by matrix identity so
// aliased adjacency is converted once.
template <typename T>
struct CsrCache {
  std::unordered_map<const SparseTensorMatrix<T>*, CsrMatrix<T>> entries;

  const CsrMatrix<T>& get(const SparseTensorMatrix<T>& a, bool transposed) {
    auto it = entries.find(&a);
    if (it == entries.end()) {
      it = entries.emplace(&a, transposed ? transpose(coo_to_csr(a)) : coo_to_csr(a)).first;
    }
    return it->second;
  }
};

template <typename M, typename T>
void run_batched_channel(BatchEngine& engine, SparseBatch<M> batch, DenseView<const T> stacked,
                         Algorithm algorithm, const GraphConvOptions& opts, DenseView<T> out,
                         std::size_t nodes) {
  auto req = request_from_stacked(std::move(batch), stacked, algorithm);
  const LaunchPlan plan = plan_batch(plan_input_for(req, opts.scratchpad_budget_bytes,
                                                    opts.threads_per_block));
  const auto table = copy_pointer_table(req);
  std::vector<std::size_t> rows(req.batch.size(), nodes);
  const auto views = split_rows(out, std::span<const std::size_t>(rows));
  engine.batched_spmm_into(req, plan, table, std::span<const DenseView<T>>(views));
}

}  // namespace detail

/// One MatMul, Add and SpMM launch per (item, channel), plus one channel
/// accumulation per item.
template <typename T>
std::vector<DenseMatrix<T>> graph_convolution_naive(BatchEngine& engine,
                                                    const GraphConvInputs<T>& in,
                                                    const GraphConvOptions& opts = {}) {
  validate(in);
  LaunchCounter& counter = engine.counter();
  detail::CsrCache<T> csr;
  std::vector<DenseMatrix<T>> y;
  y.reserve(in.batch_size);
  for (std::size_t b = 0; b < in.batch_size; ++b) {
    std::vector<DenseMatrix<T>> c;
    c.reserve(in.channels);
    for (std::size_t ch = 0; ch < in.channels; ++ch) {
      DenseMatrix<T> u(in.nodes, in.out_dim());
      dense::matmul(in.item_features(b), in.weights[ch].cview(), u.view());
      counter.record_launch();
      dense::add_row_broadcast(u.view(), std::span<const T>(in.bias[ch]));
      counter.record_launch();
      const auto& a = *in.adjacency[b][ch];
      if (opts.algorithm == Algorithm::swa_csr) {
        c.push_back(engine.spmm(csr.get(a, false), u.cview(), opts.algorithm));
      } else {
        c.push_back(engine.spmm(a, u.cview(), opts.algorithm));
      }
    }
    for (std::size_t ch = 1; ch < in.channels; ++ch) dense::accumulate(c[0].view(), c[ch].cview());
    counter.record_launch();
    y.push_back(std::move(c[0]));
  }
  return y;
}

/// One MatMul, Add and batched SpMM launch per channel over the whole
/// mini-batch, plus one final accumulation. Returns the stacked output.
template <typename T>
DenseMatrix<T> graph_convolution_batched(BatchEngine& engine, const GraphConvInputs<T>& in,
                                         const GraphConvOptions& opts = {}) {
  validate(in);
  LaunchCounter& counter = engine.counter();
  const DenseView<const T> xr = reshape_stacked(in);
  detail::CsrCache<T> csr;
  std::vector<DenseMatrix<T>> c;
  c.reserve(in.channels);
  for (std::size_t ch = 0; ch < in.channels; ++ch) {
    DenseMatrix<T> u(xr.rows(), in.out_dim());
    dense::matmul(xr, in.weights[ch].cview(), u.view());
    counter.record_launch();
    dense::add_row_broadcast(u.view(), std::span<const T>(in.bias[ch]));
    counter.record_launch();

    c.emplace_back(xr.rows(), in.out_dim());
    if (opts.algorithm == Algorithm::swa_csr) {
      SparseBatch<CsrMatrix<T>> list{{}, in.out_dim()};
      for (std::size_t b = 0; b < in.batch_size; ++b) {
        list.items.push_back(&csr.get(*in.adjacency[b][ch], false));
      }
      detail::run_batched_channel(engine, std::move(list), u.cview(), opts.algorithm, opts,
                                  c.back().view(), in.nodes);
    } else {
      SparseBatch<SparseTensorMatrix<T>> list{{}, in.out_dim()};
      for (std::size_t b = 0; b < in.batch_size; ++b) list.items.push_back(in.adjacency[b][ch].get());
      detail::run_batched_channel(engine, std::move(list), u.cview(), opts.algorithm, opts,
                                  c.back().view(), in.nodes);
    }
  }
  for (std::size_t ch = 1; ch < in.channels; ++ch) dense::accumulate(c[0].view(), c[ch].cview());
  counter.record_launch();
  return std::move(c[0]);
}

/// Backward pass of the layer for an upstream gradient of the stacked output.
/// Per channel: G = A^T grad_Y (one batched SpMM over transposed CSR),
/// grad_W = Xr^T G, grad_bias = column sums of G, grad_X += G W^T.
template <typename T>
GraphConvGradients<T> graph_convolution_backward(BatchEngine& engine, const GraphConvInputs<T>& in,
                                                 DenseView<const T> grad_y,
                                                 const GraphConvOptions& opts = {}) {
  validate(in);
  if (grad_y.rows() != in.nodes * in.batch_size || grad_y.cols() != in.out_dim()) {
    throw ShapeError("grad_y must match the stacked forward output");
  }
  LaunchCounter& counter = engine.counter();
  const DenseView<const T> xr = reshape_stacked(in);
  detail::CsrCache<T> transposed;

  GraphConvGradients<T> grads{DenseMatrix<T>(xr.rows(), in.feature_dim()), {}, {}};
  for (std::size_t ch = 0; ch < in.channels; ++ch) {
    DenseMatrix<T> g(xr.rows(), in.out_dim());
    SparseBatch<CsrMatrix<T>> list{{}, in.out_dim()};
    for (std::size_t b = 0; b < in.batch_size; ++b) {
      list.items.push_back(&transposed.get(*in.adjacency[b][ch], true));
    }
    detail::run_batched_channel(engine, std::move(list), grad_y, Algorithm::swa_csr, opts, g.view(),
                                in.nodes);

    DenseMatrix<T> gw(in.feature_dim(), in.out_dim());
    dense::matmul_tn(xr, g.cview(), gw.view());
    counter.record_launch();
    grads.grad_bias.push_back(dense::column_sums(g.cview()));
    counter.record_launch();
    dense::matmul_nt_accumulate(g.cview(), in.weights[ch].cview(), grads.grad_x.view());
    counter.record_launch();
    grads.grad_w.push_back(std::move(gw));
  }
  return grads;
}

}  // namespace bspmm
