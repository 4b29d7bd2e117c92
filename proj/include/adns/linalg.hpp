#pragma once

#include "adns/matrix.hpp"

#include <cstddef>

namespace adns {

struct SymEigResult {
    Vector eigenvalues;        ///< non-increasing
    DenseMatrix eigenvectors;  ///< column i pairs with eigenvalues[i]
};

/// Thin SVD: a = u * diag(sigma) * vt with r = min(rows, cols).
struct SvdResult {
    DenseMatrix u;   ///< rows x r, orthonormal columns
    Vector sigma;    ///< length r, non-increasing, non-negative
    DenseMatrix vt;  ///< r x cols, orthonormal rows
};

inline constexpr std::size_t kJacobiMaxSweeps = 100;
inline constexpr double kJacobiRelativeTolerance = 1e-12;
/// Singular values below this fraction of the largest are clamped to zero.
inline constexpr double kSingularValueClamp = 1e-12;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Iterates until the off-diagonal Frobenius mass falls below
/// kJacobiRelativeTolerance * ||a||_F, or throws NumericalError after
/// kJacobiMaxSweeps sweeps. Each eigenvector is sign-normalized so that its
/// largest-magnitude entry (lowest index on ties) is non-negative.
SymEigResult sym_eig(const DenseMatrix& a, double symmetry_tol = 1e-10);

/// Thin SVD via the eigendecomposition of the smaller Gram matrix. Singular
/// vectors of the larger side are recovered by multiplication and
/// re-orthonormalized; directions with clamped (zero) singular values are
/// completed to an orthonormal set deterministically.
SvdResult thin_svd(const DenseMatrix& a);

/// Best rank-k approximation u[:, :k] * diag(sigma[:k]) * vt[:k, :].
DenseMatrix rank_k_truncate(const SvdResult& svd, std::size_t k);

/// reconstruct(svd) == rank_k_truncate(svd, sigma.size()).
DenseMatrix reconstruct(const SvdResult& svd);

/// ||q^T q - I||_F for a matrix with intended orthonormal columns.
double orthonormality_error(const DenseMatrix& q);

/// Number of singular values above rel_tol * sigma_max.
std::size_t numerical_rank(const Vector& sigma, double rel_tol = 1e-10);

/// Largest-magnitude entry (lowest index on ties) made non-negative; returns
/// true if the vector was flipped.
bool normalize_sign(std::span<double> v) noexcept;

}  // namespace adns
