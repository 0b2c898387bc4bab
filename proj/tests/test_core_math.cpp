#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>

#include "gfb/core_math.hpp"

using namespace gfb;

namespace {

// Naive triple loop, independent of the CSR kernels.
DenseMatrix naive_product(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

DenseMatrix random_dense(std::size_t r, std::size_t c, Rng& rng) {
    DenseMatrix m(r, c);
    for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
    return m;
}

DenseMatrix random_sparse_dense(std::size_t r, std::size_t c, double density, Rng& rng, bool symmetric) {
    DenseMatrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = symmetric ? i : 0; j < c; ++j)
            if (rng.uniform() < density) {
                m(i, j) = rng.uniform(-1.0, 1.0);
                if (symmetric) m(j, i) = m(i, j);
            }
    return m;
}

Eigen::MatrixXd to_eigen(const DenseMatrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
    return e;
}

} // namespace

TEST(Spmm, IdentityLeavesFeaturesUnchanged) {
    const DenseMatrix h{{1.5, -2.0, 3.0}, {0.25, 4.0, -1.0}};
    EXPECT_EQ(spmm(SparseMatrix::identity(2), h), h);
}

TEST(Spmm, PermutationSwapsRows) {
    const auto a = SparseMatrix::from_dense(DenseMatrix{{0, 1}, {1, 0}});
    EXPECT_EQ(spmm(a, DenseMatrix{{1, 2}, {3, 4}}), (DenseMatrix{{3, 4}, {1, 2}}));
}

TEST(Spmm, AveragingMatrix) {
    const auto a = SparseMatrix::from_dense(DenseMatrix{{0.5, 0.5}, {0.5, 0.5}});
    EXPECT_EQ(spmm(a, DenseMatrix{{1, 0}, {3, 2}}), (DenseMatrix{{2, 1}, {2, 1}}));
}

TEST(Spmm, DimensionMismatchIsReported) {
    const auto a = SparseMatrix::identity(3);
    try {
        spmm(a, DenseMatrix(2, 2));
        FAIL() << "expected an exception";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("3x3"), std::string::npos);
    }
}

TEST(Spmm, MatchesNaiveDenseProductOnSymmetricMatrices) {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(12);
        const std::size_t d = 1 + rng.uniform_index(6);
        const DenseMatrix ad = random_sparse_dense(n, n, 0.4, rng, true);
        const DenseMatrix h = random_dense(n, d, rng);
        const auto a = SparseMatrix::from_dense(ad);
        ASSERT_TRUE(a.is_symmetric());
        EXPECT_LE(max_abs_diff(spmm(a, h), naive_product(ad, h)), 1e-12);
        EXPECT_LE(max_abs_diff(spmm_transposed(a, h), naive_product(transpose(ad), h)), 1e-12);
    }
}

TEST(Spmm, ComposesLikeTheMatrixProduct) {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(10);
        const DenseMatrix ad = random_sparse_dense(n, n, 0.5, rng, false);
        const DenseMatrix bd = random_sparse_dense(n, n, 0.5, rng, false);
        const DenseMatrix h = random_dense(n, 3, rng);
        const auto a = SparseMatrix::from_dense(ad);
        const auto b = SparseMatrix::from_dense(bd);
        const auto ab = SparseMatrix::from_dense(naive_product(ad, bd));
        EXPECT_LE(max_abs_diff(spmm(a, spmm(b, h)), spmm(ab, h)), 1e-12);
    }
}

TEST(Spmm, BitReproducible) {
    Rng rng(13);
    const auto a = SparseMatrix::from_dense(random_sparse_dense(30, 30, 0.3, rng, true));
    const DenseMatrix h = random_dense(30, 7, rng);
    EXPECT_EQ(spmm(a, h), spmm(a, h));
}

TEST(DenseProducts, AgreeWithEigen) {
    Rng rng(14);
    const DenseMatrix a = random_dense(5, 4, rng), b = random_dense(4, 6, rng), c = random_dense(6, 4, rng),
                      d = random_dense(5, 3, rng);
    auto close = [](const DenseMatrix& m, const Eigen::MatrixXd& e) { return (to_eigen(m) - e).cwiseAbs().maxCoeff(); };
    EXPECT_LE(close(matmul(a, b), to_eigen(a) * to_eigen(b)), 1e-12);
    EXPECT_LE(close(matmul_bt(a, c), to_eigen(a) * to_eigen(c).transpose()), 1e-12);
    EXPECT_LE(close(matmul_at(a, d), to_eigen(a).transpose() * to_eigen(d)), 1e-12);
    EXPECT_THROW(matmul(a, a), Error);
}

TEST(SparseMatrix, RejectsDuplicatesAndDropsZeros) {
    EXPECT_THROW(SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {0, 1, 2.0}}), Error);
    const auto m = SparseMatrix::from_triplets(2, 2, {{1, 0, 0.0}, {0, 1, 3.0}});
    EXPECT_EQ(m.nnz(), 1u);
    EXPECT_EQ(m.at(0, 1), 3.0);
    EXPECT_EQ(m.at(1, 0), 0.0);
}

TEST(SparseMatrix, ConstructorEnforcesCsrInvariants) {
    EXPECT_THROW(SparseMatrix(1, 3, {0, 2}, {2, 1}, {1.0, 1.0}), Error); // unsorted columns
    EXPECT_THROW(SparseMatrix(1, 3, {0, 2}, {1, 1}, {1.0, 1.0}), Error); // repeated column
    EXPECT_THROW(SparseMatrix(1, 3, {0, 1}, {0}, {0.0}), Error);         // explicit zero
    EXPECT_THROW(SparseMatrix(2, 3, {0, 1, 0}, {0}, {1.0}), Error);      // decreasing offsets
    EXPECT_NO_THROW(SparseMatrix(1, 3, {0, 2}, {0, 2}, {1.0, 2.0}));
}

TEST(Rng, SameSeedSameStream) {
    Rng a(99), b(99);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, ChildStreamIgnoresParentConsumption) {
    Rng a(5), b(5);
    for (int i = 0; i < 17; ++i) b.next_u64();
    Rng ca = a.split(3), cb = b.split(3);
    for (int i = 0; i < 100; ++i) ASSERT_EQ(ca.next_u64(), cb.next_u64());
    EXPECT_NE(a.split(3).next_u64(), a.split(4).next_u64());
}

TEST(Rng, UniformRanges) {
    Rng r(1);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        ASSERT_LT(r.uniform_index(7), 7u);
    }
    EXPECT_THROW(r.uniform_index(0), Error);
}

TEST(GlorotInit, SingleEntryBound) {
    Rng r(3);
    const auto w = glorot_init(1, 1, r);
    EXPECT_LE(std::abs(w(0, 0)), std::sqrt(3.0));
}

TEST(GlorotInit, LargeMatrixBound) {
    Rng r(4);
    const auto w = glorot_init(200, 300, r);
    const double bound = std::sqrt(6.0 / 500.0);
    for (double v : w.values()) ASSERT_LE(std::abs(v), bound);
}

TEST(GlorotInit, DeterministicAndValidated) {
    Rng a(8), b(8);
    EXPECT_EQ(glorot_init(7, 9, a), glorot_init(7, 9, b));
    EXPECT_THROW(glorot_init(0, 3, a), Error);
    EXPECT_THROW(glorot_init(3, 0, a), Error);
}

TEST(DropoutMask, ZeroRateKeepsEverything) {
    Rng r(1);
    EXPECT_EQ(dropout_mask(4, 5, 0.0, r), DenseMatrix(4, 5, 1.0));
}

TEST(DropoutMask, HalfRateIsExpectationPreserving) {
    Rng r(2);
    const auto m = dropout_mask(1000, 1000, 0.5, r);
    double sum = 0.0;
    for (double v : m.values()) {
        ASSERT_TRUE(v == 0.0 || v == 2.0);
        sum += v;
    }
    EXPECT_NEAR(sum / 1e6, 1.0, 0.01);
}

TEST(DropoutMask, DeterministicAndValidated) {
    Rng a(6), b(6);
    EXPECT_EQ(dropout_mask(10, 10, 0.5, a), dropout_mask(10, 10, 0.5, b));
    EXPECT_THROW(dropout_mask(2, 2, 1.0, a), Error);
    EXPECT_THROW(dropout_mask(2, 2, -0.1, a), Error);
}

TEST(FiniteDifference, SumOfSquares) {
    auto f = [](const DenseMatrix& x) {
        double s = 0.0;
        for (double v : x.values()) s += v * v;
        return s;
    };
    const auto g = finite_difference_grad(f, DenseMatrix{{1, 2}}, 1e-5);
    EXPECT_NEAR(g(0, 0), 2.0, 1e-8);
    EXPECT_NEAR(g(0, 1), 4.0, 1e-8);
}

TEST(FiniteDifference, LinearTraceHasConstantGradient) {
    const DenseMatrix c{{1, -2}, {0.5, 3}};
    auto f = [&](const DenseMatrix& x) { return x(0, 0) * c(0, 0) + x(0, 1) * c(1, 0) + x(1, 0) * c(0, 1) + x(1, 1) * c(1, 1); };
    Rng r(5);
    for (int trial = 0; trial < 3; ++trial) {
        const auto g = finite_difference_grad(f, random_dense(2, 2, r), 1e-4);
        EXPECT_LE(max_abs_diff(g, transpose(c)), 1e-10);
    }
}

TEST(FiniteDifference, NonFiniteValueIsAnError) {
    auto f = [](const DenseMatrix& x) { return std::log(x(0, 0)); };
    EXPECT_THROW(finite_difference_grad(f, DenseMatrix{{0.0}}, 1e-5), Error);
    EXPECT_THROW(finite_difference_grad(f, DenseMatrix{{1.0}}, 0.0), Error);
}
