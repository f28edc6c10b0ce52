// SPDX-License-Identifier: Apache-2.0
// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bspmm/bench.hpp"
#include "bspmm/compare.hpp"
#include "bspmm/convert.hpp"
#include "bspmm/engine.hpp"
#include "bspmm/generate.hpp"
#include "bspmm/graph_conv.hpp"
#include "bspmm/planner.hpp"

using namespace bspmm;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool ok = true;
  std::string detail;
};

double elapsed(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Dense triple loop in double over the densified operand.
template <typename M>
DenseMatrix<float> dense_oracle(const M& a, DenseView<const float> b) {
  const auto ad = densify(a);
  DenseMatrix<float> c(a.rows(), b.cols());
  std::vector<double> acc(b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::ranges::fill(acc, 0.0);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double v = ad(i, k);
      if (v == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) acc[j] += v * double(b(k, j));
    }
    for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) = static_cast<float>(acc[j]);
  }
  return c;
}

bool bit_equal(const DenseMatrix<float>& a, const DenseMatrix<float>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

std::vector<CsrMatrix<float>> to_csr(const std::vector<SparseTensorMatrix<float>>& st) {
  std::vector<CsrMatrix<float>> out;
  for (const auto& a : st) out.push_back(coo_to_csr(a));
  return out;
}

std::vector<DenseMatrix<float>> dense_inputs(const std::vector<SparseTensorMatrix<float>>& st,
                                             std::size_t n_b, std::uint64_t seed) {
  std::vector<DenseMatrix<float>> out;
  for (std::size_t i = 0; i < st.size(); ++i) out.push_back(random_dense<float>(st[i].cols(), n_b, seed + i));
  return out;
}

template <typename M>
BatchedSpmmRequest<M> make_request(const std::vector<M>& a, const std::vector<DenseMatrix<float>>& b,
                                   Algorithm algo) {
  return request_from_list(make_batch(std::span<const M>(a), b.front().cols()),
                           std::span<const DenseMatrix<float>>(b), algo);
}

// Runs sequential and batched execution of one algorithm and returns the
// worst relative error of either against the oracle outputs.
template <typename M>
double worst_error(BatchEngine& engine, const std::vector<M>& a, const std::vector<DenseMatrix<float>>& b,
                   Algorithm algo, const std::vector<DenseMatrix<float>>& ref) {
  const auto req = make_request(a, b, algo);
  const auto seq = engine.sequential_spmm(req);
  const auto bat = engine.batched_spmm(req, plan_batch(plan_input_for(req)));
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max({worst, max_relative_error(seq[i].cview(), ref[i].cview()),
                      max_relative_error(bat[i].cview(), ref[i].cview())});
  }
  return worst;
}

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  BatchEngine engine;
  std::size_t instances = 0;
  double worst = 0.0;
  std::uint64_t seed = 1;
  for (std::size_t dim : {8, 32, 50, 64, 128}) {
    for (std::size_t nnz : {1, 3, 5}) {
      for (std::size_t n_b : {1, 8, 16, 64, 512}) {
        const auto st = random_mixed_batch<float>(3, {dim, dim}, {nnz, nnz}, seed++);
        const auto csr = to_csr(st);
        const auto b = dense_inputs(st, n_b, seed++);
        std::vector<DenseMatrix<float>> ref;
        for (std::size_t i = 0; i < st.size(); ++i) ref.push_back(dense_oracle(st[i], b[i].cview()));
        worst = std::max({worst, worst_error(engine, st, b, Algorithm::baseline, ref),
                          worst_error(engine, st, b, Algorithm::swa_st, ref),
                          worst_error(engine, csr, b, Algorithm::swa_csr, ref)});
        instances += st.size();
      }
    }
  }
  const double secs = elapsed(t0);
  return {instances >= 200 && worst <= 1e-5 && secs < 120.0,
          fmt("%zu instances x 3 kernels x {sequential, batched}, max rel err %.3g, %.1fs", instances,
              worst, secs)};
}

Outcome planner_conformance() {
  std::size_t failures = 0;
  for (std::size_t n = 1; n <= 1024; ++n) {
    std::size_t expected = 32;
    if (n <= 16) {
      expected = 1;
      while (expected < n) expected *= 2;
    }
    if (compute_subwarp(n).width() != expected) ++failures;
  }
  const bool subwarp_ok = failures == 0;

  const auto fits = plan_batch_st({Layout::sparse_tensor, std::vector<std::size_t>(100, 50), 64, 4, 32768, 128});
  const auto split = plan_batch_st({Layout::sparse_tensor, std::vector<std::size_t>(100, 50), 256, 4, 32768, 128});
  const bool units_ok = fits.work_units.size() == 100 && split.work_units.size() == 200 &&
                        fits.launches == 1 && split.launches == 1;

  Rng rng(99);
  std::size_t csr_ok = 0;
  const std::size_t budgets[] = {16384, 32768, 49152, 65536};
  const std::size_t tpbs[] = {64, 128, 256, 512};
  for (int trial = 0; trial < 50; ++trial) {
    PlanInput in;
    in.layout = Layout::csr;
    const std::size_t batch = 1 + rng() % 200;
    for (std::size_t i = 0; i < batch; ++i) in.batch_rows.push_back(1 + rng() % 512);
    in.dense_cols = 1 + rng() % 20000;
    in.element_bytes = rng() % 2 ? 4 : 8;
    in.scratchpad_budget_bytes = budgets[rng() % 4];
    in.threads_per_block = tpbs[rng() % 4];
    const auto plan = plan_batch_csr(in);

    std::size_t sw = 32;
    if (in.dense_cols <= 16) {
      sw = 1;
      while (sw < in.dense_cols) sw *= 2;
    }
    const std::size_t gpb = in.threads_per_block / sw;
    const std::size_t scratch = gpb * in.dense_cols * in.element_bytes;
    const std::size_t p = (scratch + in.scratchpad_budget_bytes - 1) / in.scratchpad_budget_bytes;
    const std::size_t max_m = *std::ranges::max_element(in.batch_rows);
    if (plan.total_threads == max_m * sw * batch * p && plan.p == p) ++csr_ok;
  }
  return {subwarp_ok && units_ok && csr_ok == 50,
          fmt("subwarp 1..1024 mismatches %zu; ST units %zu/%zu; CSR total_threads %zu/50 match", failures,
              fits.work_units.size(), split.work_units.size(), csr_ok)};
}

GraphConvInputs<float> conv_inputs(std::size_t batch, std::size_t channels, std::size_t nodes,
                                   std::size_t n_x, std::size_t n_w, std::uint64_t seed) {
  GraphConvInputs<float> in;
  in.batch_size = batch;
  in.channels = channels;
  in.nodes = nodes;
  for (std::size_t b = 0; b < batch; ++b) {
    in.adjacency.emplace_back();
    for (std::size_t ch = 0; ch < channels; ++ch) {
      in.adjacency.back().push_back(std::make_shared<const SparseTensorMatrix<float>>(
          random_adjacency<float>(nodes, std::min<std::size_t>(3, nodes), seed + 97 * b + ch)));
    }
  }
  in.features = random_dense<float>(nodes * batch, n_x, seed + 1, -1.0f, 1.0f);
  for (std::size_t ch = 0; ch < channels; ++ch) {
    in.weights.push_back(random_dense<float>(n_x, n_w, seed + 10 + ch, -1.0f, 1.0f));
    const auto bias = random_dense<float>(1, n_w, seed + 20 + ch, -1.0f, 1.0f);
    in.bias.emplace_back(bias.data().begin(), bias.data().end());
  }
  return in;
}

Outcome launch_counts() {
  const auto in = conv_inputs(50, 4, 16, 8, 8, 5);
  BatchEngine engine;
  graph_convolution_naive(engine, in);
  const auto naive = engine.counter().launches();
  engine.counter().reset();
  graph_convolution_batched(engine, in);
  const auto batched = engine.counter().launches();
  return {naive == 650 && batched == 13, fmt("B=50 C=4: naive %llu, batched %llu", (unsigned long long)naive,
                                             (unsigned long long)batched)};
}

bool fd_close(double analytic, double fd) { return std::abs(analytic - fd) <= 1e-2; }

Outcome gradient_checks() {
  const auto t0 = Clock::now();
  const double h = 1e-3;
  std::size_t checked = 0, bad = 0;
  auto check = [&](double analytic, double fd) {
    ++checked;
    if (!fd_close(analytic, fd)) ++bad;
  };

  // Graph convolution layer, loss = sum(Y .* R).
  auto in = conv_inputs(2, 2, 5, 3, 2, 7);
  const auto r = random_dense<float>(10, 2, 8, -1.0f, 1.0f);
  BatchEngine engine;
  auto loss = [&] {
    const auto y = graph_convolution_batched(engine, in);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += double(y.data()[i]) * r.data()[i];
    return s;
  };
  auto central = [&](float& x, const auto& f) {
    const float saved = x;
    x = saved + float(h);
    const double up = f();
    x = saved - float(h);
    const double down = f();
    x = saved;
    return (up - down) / (2 * h);
  };
  const auto grads = graph_convolution_backward(engine, in, r.cview());
  for (std::size_t i = 0; i < in.features.size(); ++i) check(grads.grad_x.data()[i], central(in.features.data()[i], loss));
  for (std::size_t ch = 0; ch < 2; ++ch) {
    for (std::size_t i = 0; i < in.weights[ch].size(); ++i) {
      check(grads.grad_w[ch].data()[i], central(in.weights[ch].data()[i], loss));
    }
    for (std::size_t j = 0; j < 2; ++j) check(grads.grad_bias[ch][j], central(in.bias[ch][j], loss));
  }

  // Single SpMM, w.r.t. the dense input and the sparse values.
  const auto a = coo_to_csr(random_sparse<float>(5, 2, 11));
  auto b = random_dense<float>(5, 2, 12, -1.0f, 1.0f);
  const auto g = random_dense<float>(5, 2, 13, -1.0f, 1.0f);
  std::vector<float> values(a.values().begin(), a.values().end());
  auto spmm_loss = [&] {
    const CsrMatrix<float> m(5, 5, {a.rpt().begin(), a.rpt().end()}, {a.colids().begin(), a.colids().end()},
                             values);
    const auto c = spmm_swa_csr(m, b.cview(), compute_subwarp(2));
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) s += double(c.data()[i]) * g.data()[i];
    return s;
  };
  const auto gb = spmm_grad_dense(a, g.cview());
  for (std::size_t i = 0; i < b.size(); ++i) check(gb.data()[i], central(b.data()[i], spmm_loss));
  const auto gv = spmm_grad_values(a, b.cview(), g.cview());
  for (std::size_t k = 0; k < values.size(); ++k) check(gv[k], central(values[k], spmm_loss));

  const double secs = elapsed(t0);
  return {bad == 0 && secs < 10.0, fmt("%zu partials, %zu outside tolerance, %.2fs", checked, bad, secs)};
}

Outcome determinism() {
  const auto st = random_mixed_batch<float>(100, {50, 50}, {3, 3}, 17);
  const auto csr = to_csr(st);
  const auto b = dense_inputs(st, 512, 18);
  BatchEngine serial({.threads = 1});
  BatchEngine pool({.threads = std::max<std::size_t>(4, std::thread::hardware_concurrency())});
  std::size_t mismatches = 0, most_workers = 0;
  auto compare = [&](const auto& a, Algorithm algo) {
    const auto req = make_request(a, b, algo);
    const auto plan = plan_batch(plan_input_for(req));
    const auto ref = serial.batched_spmm(req, plan);
    for (int run = 0; run < 10; ++run) {
      const auto c = pool.batched_spmm(req, plan);
      most_workers = std::max(most_workers, pool.last_workers());
      for (std::size_t i = 0; i < c.size(); ++i) mismatches += !bit_equal(c[i], ref[i]);
    }
  };
  compare(st, Algorithm::baseline);
  compare(st, Algorithm::swa_st);
  compare(csr, Algorithm::swa_csr);
  return {mismatches == 0 && most_workers > 1,
          fmt("pool of %zu (up to %zu active), 3 kernels x 10 runs, %zu non-identical outputs", pool.threads(),
              most_workers, mismatches)};
}

Outcome performance() {
  BenchConfig cfg;  // batch 100, dim 50, nnz/row 3, n_B 8..512, all kernels, both modes
  cfg.repeats = 5;
  cfg.threads = std::max<std::size_t>(4, std::thread::hardware_concurrency());
  const auto report = run_benchmark(cfg);
  std::stringstream csv;
  write_csv(csv, report);
  const auto parsed = read_csv(csv);

  std::size_t bad_flops = 0;
  for (const BenchRow& row : parsed.rows) {
    const double recomputed = 2.0 * double(row.total_nnz) * double(row.n_b) / row.mean_seconds;
    if (!(row.flops > 0.0) || std::abs(row.flops - recomputed) > 1e-9 * recomputed) ++bad_flops;
  }
  std::size_t pairs = 0, batched_faster = 0;
  double seq_512 = 0.0, bat_512 = 0.0;
  for (const BenchRow& s : parsed.rows) {
    if (s.mode != "sequential") continue;
    for (const BenchRow& t : parsed.rows) {
      if (t.mode == "batched" && t.algorithm == s.algorithm && t.n_b == s.n_b) {
        ++pairs;
        batched_faster += t.mean_seconds <= s.mean_seconds;
        if (s.n_b == 512 && s.algorithm == "swa-st") {
          seq_512 = s.mean_seconds;
          bat_512 = t.mean_seconds;
        }
      }
    }
  }
  return {bad_flops == 0 && parsed == report && pairs > 0,
          fmt("FLOPS recomputed for %zu rows, %zu mismatches; soft: %zu workers, swa-st n_B=512 batched %.3gms vs "
              "sequential %.3gms, batched <= sequential in %zu/%zu configs",
              parsed.rows.size(), bad_flops, cfg.threads, bat_512 * 1e3, seq_512 * 1e3, batched_faster, pairs)};
}

Outcome mixed_batch() {
  const auto st = random_mixed_batch<float>(100, {32, 256}, {1, 5}, 23);
  const auto csr = to_csr(st);
  BatchEngine engine;
  double worst = 0.0;
  for (std::size_t n_b : {64, 300}) {
    const auto b = dense_inputs(st, n_b, 24 + n_b);
    std::vector<DenseMatrix<float>> ref;
    for (std::size_t i = 0; i < st.size(); ++i) ref.push_back(dense_oracle(st[i], b[i].cview()));
    worst = std::max({worst, worst_error(engine, st, b, Algorithm::swa_st, ref),
                      worst_error(engine, csr, b, Algorithm::swa_csr, ref)});
  }
  return {worst <= 1e-5, fmt("100 items, dim 32..256, nnz/row 1..5, swa-st and swa-csr, max rel err %.3g", worst)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"oracle_equivalence", oracle_equivalence},
      {"planner_conformance", planner_conformance},
      {"launch_counts", launch_counts},
      {"gradient_checks", gradient_checks},
      {"determinism", determinism},
      {"performance_report", performance},
      {"mixed_batch", mixed_batch},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.ok ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.ok;
  }
  return failed == 0 ? 0 : 1;
}
