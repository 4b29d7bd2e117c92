#include "adns/error.hpp"
#include "adns/linalg.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace adns;
using adns::testing_util::random_matrix;
using adns::testing_util::random_symmetric;

namespace {

DenseMatrix diag(std::initializer_list<double> v) {
    std::vector<double> d(v);
    return DenseMatrix::diagonal(d);
}

}  // namespace

TEST(MatrixOps, RejectsNonFiniteAndBadShapes) {
    EXPECT_THROW(DenseMatrix(2, 2, {1.0, 2.0, 3.0}), ValidationError);
    EXPECT_THROW(DenseMatrix(1, 1, {std::nan("")}), ValidationError);
    EXPECT_THROW(matmul(DenseMatrix(2, 3), DenseMatrix(2, 3)), ValidationError);
    EXPECT_THROW(DenseMatrix(2, 2) += DenseMatrix(3, 2), ValidationError);
}

TEST(MatrixOps, TransposedProductsAgreeWithExplicitTranspose) {
    std::mt19937_64 rng(1);
    DenseMatrix a = random_matrix(5, 3, rng), b = random_matrix(5, 4, rng), c = random_matrix(6, 3, rng);
    EXPECT_LE(max_abs_diff(matmul_tn(a, b), matmul(a.transpose(), b)), 1e-12);
    EXPECT_LE(max_abs_diff(matmul_nt(a, c), matmul(a, c.transpose())), 1e-12);
    DenseMatrix g = gram(a);
    EXPECT_EQ(asymmetry(g), 0.0);
    EXPECT_LE(max_abs_diff(g, matmul(a.transpose(), a)), 1e-12);
}

TEST(MatrixOps, EmptyBasisShapesAreRepresentable) {
    DenseMatrix u(4, 0);
    EXPECT_EQ(u.rows(), 4u);
    EXPECT_EQ(u.cols(), 0u);
    DenseMatrix p = matmul_nt(u, u);
    EXPECT_EQ(p.rows(), 4u);
    EXPECT_EQ(max_abs(p), 0.0);
}

TEST(SymEig, DiagonalMatrixGivesSortedEigenvaluesAndAxisVectors) {
    SymEigResult r = sym_eig(diag({1.0, 3.0, 2.0}));
    ASSERT_EQ(r.eigenvalues.size(), 3u);
    EXPECT_DOUBLE_EQ(r.eigenvalues[0], 3.0);
    EXPECT_DOUBLE_EQ(r.eigenvalues[1], 2.0);
    EXPECT_DOUBLE_EQ(r.eigenvalues[2], 1.0);
    EXPECT_NEAR(std::abs(r.eigenvectors(1, 0)), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(r.eigenvectors(2, 1)), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(r.eigenvectors(0, 2)), 1.0, 1e-12);
}

TEST(SymEig, TwoByTwoAnalytic) {
    SymEigResult r = sym_eig(DenseMatrix::from_rows({{2, 1}, {1, 2}}));
    EXPECT_NEAR(r.eigenvalues[0], 3.0, 1e-12);
    EXPECT_NEAR(r.eigenvalues[1], 1.0, 1e-12);
}

TEST(SymEig, RandomReconstructionAndOrthonormality) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        DenseMatrix a = random_symmetric(8, rng);
        SymEigResult r = sym_eig(a);
        DenseMatrix v = r.eigenvectors;
        DenseMatrix back = matmul(matmul(v, DenseMatrix::diagonal(r.eigenvalues)), v.transpose());
        EXPECT_LE(max_abs_diff(back, a), 1e-6);
        EXPECT_LE(orthonormality_error(v), 1e-10);
        for (std::size_t i = 1; i < r.eigenvalues.size(); ++i) EXPECT_GE(r.eigenvalues[i - 1], r.eigenvalues[i]);
    }
}

TEST(SymEig, SignConventionIsDeterministic) {
    std::mt19937_64 rng(3);
    DenseMatrix a = random_symmetric(6, rng);
    SymEigResult r1 = sym_eig(a), r2 = sym_eig(a);
    EXPECT_EQ(r1.eigenvectors, r2.eigenvectors);
    for (std::size_t c = 0; c < 6; ++c) {
        Vector col = r1.eigenvectors.column(c);
        std::size_t best = 0;
        for (std::size_t i = 1; i < col.size(); ++i)
            if (std::abs(col[i]) > std::abs(col[best])) best = i;
        EXPECT_GE(col[best], 0.0);
    }
}

TEST(SymEig, RejectsAsymmetricInput) {
    EXPECT_THROW(sym_eig(DenseMatrix::from_rows({{1, 2}, {0, 1}})), ValidationError);
    EXPECT_THROW(sym_eig(DenseMatrix(2, 3)), ValidationError);
}

TEST(ThinSvd, IdentityHasUnitSingularValues) {
    SvdResult s = thin_svd(DenseMatrix::identity(3));
    ASSERT_EQ(s.sigma.size(), 3u);
    for (double v : s.sigma) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(ThinSvd, RankOneOuterProduct) {
    DenseMatrix u = DenseMatrix::from_rows({{2.0}, {0.0}, {0.0}});  // |u| = 2
    DenseMatrix v = DenseMatrix::from_rows({{0.0}, {3.0}, {0.0}, {0.0}});  // |v| = 3
    SvdResult s = thin_svd(matmul_nt(u, v));
    EXPECT_NEAR(s.sigma[0], 6.0, 1e-12);
    for (std::size_t i = 1; i < s.sigma.size(); ++i) EXPECT_NEAR(s.sigma[i], 0.0, 1e-12);
    EXPECT_EQ(numerical_rank(s.sigma), 1u);
    EXPECT_LE(orthonormality_error(s.u), 1e-10);
}

TEST(ThinSvd, TallAndWideAreOrthonormal) {
    std::mt19937_64 rng(11);
    for (auto [r, c] : {std::pair{20, 5}, std::pair{5, 20}, std::pair{7, 7}}) {
        DenseMatrix a = random_matrix(r, c, rng);
        SvdResult s = thin_svd(a);
        EXPECT_LE(orthonormality_error(s.u), 1e-8);
        EXPECT_LE(orthonormality_error(s.vt.transpose()), 1e-8);
        EXPECT_LE(max_abs_diff(reconstruct(s), a), 1e-8);
    }
}

TEST(ThinSvd, RankDeficientCompletesOrthonormalBasis) {
    std::mt19937_64 rng(5);
    DenseMatrix a = matmul(random_matrix(10, 2, rng), random_matrix(2, 6, rng));
    SvdResult s = thin_svd(a);
    EXPECT_EQ(numerical_rank(s.sigma), 2u);
    EXPECT_LE(orthonormality_error(s.u), 1e-8);
    EXPECT_LE(max_abs_diff(reconstruct(s), a), 1e-8);
}

TEST(RankKTruncate, DiagonalDiscardsSmallestValue) {
    DenseMatrix a = diag({3.0, 2.0, 1.0});
    DenseMatrix t = rank_k_truncate(thin_svd(a), 2);
    EXPECT_NEAR(frobenius_norm(a - t), 1.0, 1e-12);
    EXPECT_LE(frobenius_norm(a - rank_k_truncate(thin_svd(a), 3)), 1e-8);
}

TEST(RankKTruncate, BeatsRandomRankTwoCompetitors) {
    std::mt19937_64 rng(13);
    DenseMatrix a = random_matrix(6, 4, rng);
    const SvdResult s = thin_svd(a);
    const double best = frobenius_norm(a - rank_k_truncate(s, 2));
    const double expected = std::sqrt(s.sigma[2] * s.sigma[2] + s.sigma[3] * s.sigma[3]);
    EXPECT_NEAR(best, expected, 1e-10);
    for (int i = 0; i < 1000; ++i) {
        DenseMatrix competitor = matmul(random_matrix(6, 2, rng), random_matrix(2, 4, rng));
        EXPECT_LE(best, frobenius_norm(a - competitor) + 1e-12);
    }
}

TEST(RankKTruncate, RejectsRankAboveAvailable) {
    EXPECT_THROW(rank_k_truncate(thin_svd(DenseMatrix::identity(2)), 3), ValidationError);
}
