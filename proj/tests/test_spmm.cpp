// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cstring>

#include "bspmm/compare.hpp"
#include "bspmm/convert.hpp"
#include "bspmm/generate.hpp"
#include "bspmm/spmm.hpp"

using namespace bspmm;

namespace {

SparseTensorMatrix<float> identity_st(std::size_t n) {
  std::vector<index_t> ids;
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back(static_cast<index_t>(i));
    ids.push_back(static_cast<index_t>(i));
  }
  return SparseTensorMatrix<float>(n, n, ids, std::vector<float>(n, 1.0f));
}

template <typename T>
bool bit_equal(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(T)) == 0;
}

// Loss sum(C .* R) evaluated through the dense oracle in double.
double weighted_loss(const DenseMatrix<double>& a, const DenseMatrix<double>& b,
                     const DenseMatrix<double>& r) {
  const auto c = gemm_oracle(a.cview(), b.cview());
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += c.data()[i] * r.data()[i];
  return s;
}

}  // namespace

TEST(LaneGroup, ValidWidths) {
  for (std::size_t w : {1u, 2u, 4u, 8u, 16u, 32u}) EXPECT_EQ(LaneGroup(w).width(), w);
  for (std::size_t w : {0u, 3u, 12u, 64u}) EXPECT_THROW(LaneGroup{w}, ParameterError);
}

TEST(Scratchpad, OverflowIsInternalError) {
  Scratchpad<float> pad(64);
  auto v = pad.acquire(4, 4);
  EXPECT_EQ(pad.used_bytes(), 64u);
  for (std::size_t i = 0; i < 4; ++i) {
    for (float x : v.row(i)) EXPECT_EQ(x, 0.0f);
  }
  EXPECT_THROW(pad.acquire(4, 5), InternalError);
}

TEST(GemmOracle, TrivialCases) {
  const DenseMatrix<float> eye(2, 2, {1, 0, 0, 1});
  const DenseMatrix<float> b(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(gemm_oracle(eye.cview(), b.cview()), b);
  const DenseMatrix<float> zeros(2, 2);
  EXPECT_EQ(gemm_oracle(zeros.cview(), b.cview()), DenseMatrix<float>(2, 3));
  const DenseMatrix<float> two(1, 1, {2});
  const DenseMatrix<float> three(1, 1, {3});
  EXPECT_EQ(gemm_oracle(two.cview(), three.cview())(0, 0), 6.0f);
  EXPECT_THROW(gemm_oracle(b.cview(), b.cview()), ShapeError);
}

TEST(Spmm, IdentityGivesInput) {
  const auto eye = identity_st(3);
  const DenseMatrix<float> b(3, 2, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(spmm_baseline(eye, b.cview()), b);
  EXPECT_EQ(spmm_swa_st(eye, b.cview(), LaneGroup(2)), b);
  EXPECT_EQ(spmm_swa_csr(coo_to_csr(eye), b.cview(), LaneGroup(2)), b);
}

TEST(Spmm, SingleEntryAgainstOracle) {
  const SparseTensorMatrix<float> a(2, 2, {0, 1}, {2.0f});
  const DenseMatrix<float> b(2, 2, {1, 2, 3, 4});
  const auto oracle = gemm_oracle(densify(a).cview(), b.cview());
  const DenseMatrix<float> expected(2, 2, {6, 8, 0, 0});
  EXPECT_EQ(oracle, expected);
  EXPECT_EQ(spmm_baseline(a, b.cview()), expected);
  EXPECT_EQ(spmm_swa_st(a, b.cview(), LaneGroup(2)), expected);
  EXPECT_EQ(spmm_swa_csr(coo_to_csr(a), b.cview(), LaneGroup(2)), expected);
}

TEST(Spmm, BaselineMatchesOracle) {
  const auto a = random_sparse<float>(50, 3, 7);
  const auto b = random_dense<float>(50, 64, 70);
  const auto oracle = gemm_oracle(densify(a).cview(), b.cview());
  EXPECT_LE(max_relative_error(spmm_baseline(a, b.cview()).cview(), oracle.cview()), 1e-5);
}

TEST(Spmm, SwaStMatchesOracleAndBaseline) {
  const auto a = random_sparse<float>(64, 3, 1);
  const auto b = random_dense<float>(64, 512, 2);
  const auto c = spmm_swa_st(a, b.cview(), LaneGroup(32));
  const auto oracle = gemm_oracle(densify(a).cview(), b.cview());
  EXPECT_LE(max_relative_error(c.cview(), oracle.cview()), 1e-5);
  EXPECT_TRUE(bit_equal(c, spmm_baseline(a, b.cview())));
}

TEST(Spmm, SwaCsrMatchesBaseline) {
  const auto a = coo_to_csr(random_sparse<float>(40, 5, 3));
  const auto b = random_dense<float>(40, 24, 4);
  const auto c = spmm_swa_csr(a, b.cview(), LaneGroup(32));
  const auto base = spmm_baseline(csr_to_coo(a), b.cview());
  EXPECT_LE(max_relative_error(c.cview(), base.cview()), 1e-6);
}

TEST(Spmm, EmptyRowGivesZeroRow) {
  const CsrMatrix<float> a(3, 3, {0, 1, 1, 2}, {2, 0}, {1.5f, 2.0f});
  const auto b = random_dense<float>(3, 5, 9);
  const auto c = spmm_swa_csr(a, b.cview(), LaneGroup(8));
  for (float x : c.row(1)) EXPECT_EQ(x, 0.0f);
  EXPECT_EQ(c(0, 2), 1.5f * b(2, 2));
}

TEST(Spmm, ZeroNonzerosGiveZeros) {
  const SparseTensorMatrix<float> a(4, 6, {}, {});
  const auto b = random_dense<float>(6, 3, 1);
  EXPECT_EQ(spmm_swa_st(a, b.cview(), LaneGroup(4)), DenseMatrix<float>(4, 3));
  EXPECT_EQ(spmm_swa_csr(coo_to_csr(a), b.cview(), LaneGroup(4)), DenseMatrix<float>(4, 3));
}

TEST(Spmm, ShapeMismatchThrows) {
  const auto a = random_sparse<float>(5, 2, 1);
  const auto b = random_dense<float>(4, 3, 1);
  EXPECT_THROW(spmm_baseline(a, b.cview()), ShapeError);
  EXPECT_THROW(spmm_swa_st(a, b.cview(), LaneGroup(4)), ShapeError);
  EXPECT_THROW(spmm_swa_csr(coo_to_csr(a), b.cview(), LaneGroup(4)), ShapeError);
}

TEST(Spmm, ReferenceAndVectorizedPathsAreBitIdentical) {
  const simd::Isa saved = simd::active_isa();
  for (simd::Isa isa : {simd::Isa::scalar, simd::Isa::avx2, simd::Isa::neon}) {
    if (!simd::isa_available(isa)) continue;
    simd::set_active_isa(isa);
    for (std::size_t nb : {1u, 5u, 16u, 33u, 512u}) {
      const auto a = random_sparse<float>(32, 5, nb);
      const auto csr = coo_to_csr(a);
      const auto b = random_dense<float>(32, nb, nb + 1);
      const LaneGroup g = compute_subwarp(nb);
      EXPECT_TRUE(bit_equal(spmm_baseline(a, b.cview(), KernelPath::reference),
                            spmm_baseline(a, b.cview(), KernelPath::vectorized)));
      EXPECT_TRUE(bit_equal(spmm_swa_st(a, b.cview(), g, KernelPath::reference),
                            spmm_swa_st(a, b.cview(), g, KernelPath::vectorized)));
      EXPECT_TRUE(bit_equal(spmm_swa_csr(csr, b.cview(), g, KernelPath::reference),
                            spmm_swa_csr(csr, b.cview(), g, KernelPath::vectorized)));
    }
  }
  simd::set_active_isa(saved);
}

TEST(Spmm, OracleEquivalenceSweep) {
  Rng rng(2024);
  for (std::size_t dim : {8u, 32u, 50u, 64u, 128u}) {
    for (std::size_t nnz : {1u, 3u, 5u}) {
      for (std::size_t nb : {8u, 64u, 512u}) {
        const auto a = random_sparse<float>(dim, nnz, rng());
        const auto b = random_dense<float>(dim, nb, rng());
        const auto oracle = gemm_oracle(densify(a).cview(), b.cview());
        const LaneGroup g = compute_subwarp(nb);
        EXPECT_LE(max_relative_error(spmm_baseline(a, b.cview()).cview(), oracle.cview()), 1e-5);
        EXPECT_LE(max_relative_error(spmm_swa_st(a, b.cview(), g).cview(), oracle.cview()), 1e-5);
        EXPECT_LE(max_relative_error(spmm_swa_csr(coo_to_csr(a), b.cview(), g).cview(),
                                     oracle.cview()),
                  1e-5);
      }
    }
  }
}

TEST(Spmm, CsrIsRaceFreeStIsNot) {
  const auto a = random_sparse<float>(32, 5, 17);
  const auto b = random_dense<float>(32, 40, 18);
  WriteLog csr_log(32, 40);
  spmm_swa_csr(coo_to_csr(a), b.cview(), LaneGroup(32), KernelPath::reference, &csr_log);
  EXPECT_LE(csr_log.max_writers(), 1u);
  WriteLog st_log(32, 40);
  spmm_swa_st(a, b.cview(), LaneGroup(32), KernelPath::reference, &st_log);
  EXPECT_EQ(st_log.max_writers(), 5u);  // every row has 5 nonzeros, each its own group
}

TEST(Spmm, Linearity) {
  const auto a = random_sparse<float>(50, 3, 5);
  const auto b1 = random_dense<float>(50, 64, 6);
  const auto b2 = random_dense<float>(50, 64, 7);
  DenseMatrix<float> sum(50, 64);
  for (std::size_t i = 0; i < sum.size(); ++i) sum.data()[i] = b1.data()[i] + b2.data()[i];
  const auto lhs = spmm_swa_st(a, sum.cview(), LaneGroup(32));
  auto rhs = spmm_swa_st(a, b1.cview(), LaneGroup(32));
  const auto c2 = spmm_swa_st(a, b2.cview(), LaneGroup(32));
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs.data()[i] += c2.data()[i];
  EXPECT_LE(max_relative_error(lhs.cview(), rhs.cview()), 1e-5);
}

TEST(SpmmGradDense, IdentityPassesThrough) {
  const auto eye = coo_to_csr(identity_st(4));
  const auto g = random_dense<float>(4, 3, 1);
  EXPECT_EQ(spmm_grad_dense(eye, g.cview()), g);
}

TEST(SpmmGradDense, SingleEntryByHand) {
  const CsrMatrix<float> a(2, 2, {0, 1, 1}, {1}, {2.0f});
  const DenseMatrix<float> gc(2, 2, {1, 1, 0, 0});
  const auto gb = spmm_grad_dense(a, gc.cview());
  EXPECT_EQ(gb, (DenseMatrix<float>(2, 2, {0, 0, 2, 2})));
  // Same as the dense adjoint A^T G.
  const DenseMatrix<float> at(2, 2, {0, 0, 2, 0});
  EXPECT_EQ(gb, gemm_oracle(at.cview(), gc.cview()));
  EXPECT_THROW(spmm_grad_dense(a, DenseMatrix<float>(3, 2).cview()), ShapeError);
}

TEST(SpmmGradDense, FiniteDifferences) {
  const auto a = coo_to_csr(random_sparse<double>(5, 2, 31));
  const auto ad = densify(a);
  auto b = random_dense<double>(5, 3, 32);
  for (bool weighted : {false, true}) {
    DenseMatrix<double> r(5, 3);
    for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] = 1.0;
    if (weighted) r = random_dense<double>(5, 3, 33, -1.0, 1.0);
    const auto grad = spmm_grad_dense(a, r.cview());
    const double h = 1e-3;
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        const double saved = b(i, j);
        b(i, j) = saved + h;
        const double up = weighted_loss(ad, b, r);
        b(i, j) = saved - h;
        const double down = weighted_loss(ad, b, r);
        b(i, j) = saved;
        EXPECT_NEAR(grad(i, j), (up - down) / (2 * h), 1e-2);
      }
    }
  }
}

TEST(SpmmGradValues, ZeroUpstreamGivesZero) {
  const auto a = coo_to_csr(random_sparse<float>(6, 2, 1));
  const auto b = random_dense<float>(6, 4, 2);
  const DenseMatrix<float> gc(6, 4);
  for (float g : spmm_grad_values(a, b.cview(), gc.cview())) EXPECT_EQ(g, 0.0f);
}

TEST(SpmmGradValues, IdentityByHand) {
  const CsrMatrix<float> eye(2, 2, {0, 1, 2}, {0, 1}, {1.0f, 1.0f});
  const DenseMatrix<float> b(2, 2, {1, 2, 3, 4});
  const DenseMatrix<float> gc(2, 2, {1, 0, 0, 1});
  EXPECT_EQ(spmm_grad_values(eye, b.cview(), gc.cview()), (std::vector<float>{1.0f, 4.0f}));
  EXPECT_THROW(spmm_grad_values(eye, b.cview(), DenseMatrix<float>(2, 3).cview()), ShapeError);
}

TEST(SpmmGradValues, FiniteDifferences) {
  const auto a = coo_to_csr(random_sparse<double>(5, 2, 41));
  const auto b = random_dense<double>(5, 3, 42);
  const auto r = random_dense<double>(5, 3, 43, -1.0, 1.0);
  const auto grad = spmm_grad_values(a, b.cview(), r.cview());
  const double h = 1e-3;
  std::vector<double> vals(a.values().begin(), a.values().end());
  auto loss_with = [&](const std::vector<double>& v) {
    const CsrMatrix<double> m(a.rows(), a.cols(), {a.rpt().begin(), a.rpt().end()},
                              {a.colids().begin(), a.colids().end()}, v);
    return weighted_loss(densify(m), b, r);
  };
  for (std::size_t k = 0; k < vals.size(); ++k) {
    auto up = vals;
    auto down = vals;
    up[k] += h;
    down[k] -= h;
    EXPECT_NEAR(grad[k], (loss_with(up) - loss_with(down)) / (2 * h), 1e-2);
  }
}
