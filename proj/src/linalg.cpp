#include "adns/linalg.hpp"

#include "adns/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace adns {

namespace {

double off_diagonal_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

// Orders indices by value, descending; ties keep the lower index first.
std::vector<std::size_t> descending_order(const Vector& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return values[x] > values[y]; });
    return order;
}

// Removes the components of v along the first `count` columns of q (two passes).
void orthogonalize_against(Vector& v, const DenseMatrix& q, std::size_t count) {
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < count; ++j) {
            double proj = 0.0;
            for (std::size_t r = 0; r < q.rows(); ++r) proj += q(r, j) * v[r];
            for (std::size_t r = 0; r < q.rows(); ++r) v[r] -= proj * q(r, j);
        }
    }
}

// Fills column `col` of q with a unit vector orthogonal to all other columns,
// picking the standard basis vector with the largest residual.
void complete_column(DenseMatrix& q, std::size_t col) {
    Vector best;
    double best_norm = -1.0;
    for (std::size_t e = 0; e < q.rows(); ++e) {
        Vector v(q.rows(), 0.0);
        v[e] = 1.0;
        orthogonalize_against(v, q, q.cols());
        const double n = norm2(v);
        if (n > best_norm + 1e-12) {
            best_norm = n;
            best = std::move(v);
        }
    }
    if (best_norm <= 0.0) throw NumericalError("thin_svd: cannot complete orthonormal basis");
    for (double& x : best) x /= best_norm;
    q.set_column(col, best);
}

// Thin SVD of a matrix with rows >= cols.
SvdResult tall_svd(const DenseMatrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    const SymEigResult eig = sym_eig(gram(a));

    // Singular values from ||a v_i|| rather than sqrt(lambda_i): exact
    // reconstruction a = sum u_i sigma_i v_i^T while V is orthonormal.
    DenseMatrix av = matmul(a, eig.eigenvectors);
    Vector sigma(n);
    for (std::size_t i = 0; i < n; ++i) sigma[i] = norm2(av.column(i));
    const auto order = descending_order(sigma);

    SvdResult out{DenseMatrix(m, n), Vector(n), DenseMatrix(n, n)};
    const double sigma_max = n == 0 ? 0.0 : sigma[order[0]];
    std::vector<bool> zero(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = order[i];
        double s = sigma[src];
        if (s <= kSingularValueClamp * sigma_max || sigma_max == 0.0) {
            s = 0.0;
            zero[i] = true;
        }
        out.sigma[i] = s;
        for (std::size_t c = 0; c < n; ++c) out.vt(i, c) = eig.eigenvectors(c, src);
    }

    // Left vectors of the non-zero singular values first, then completion.
    for (std::size_t i = 0; i < n; ++i) {
        if (zero[i]) continue;
        Vector u = av.column(order[i]);
        for (double& x : u) x /= out.sigma[i];
        orthogonalize_against(u, out.u, i);
        const double nrm = norm2(u);
        if (nrm < 0.5) {
            zero[i] = true;
            continue;
        }
        for (double& x : u) x /= nrm;
        out.u.set_column(i, u);
    }
    // Unset columns are still zero, so orthogonalizing against every column
    // is the same as against the ones already filled.
    for (std::size_t i = 0; i < n; ++i) {
        if (zero[i]) complete_column(out.u, i);
    }

    for (std::size_t i = 0; i < n; ++i) {
        Vector u = out.u.column(i);
        if (normalize_sign(u)) {
            out.u.set_column(i, u);
            for (std::size_t c = 0; c < n; ++c) out.vt(i, c) = -out.vt(i, c);
        }
    }
    return out;
}

}  // namespace

bool normalize_sign(std::span<double> v) noexcept {
    std::size_t best = 0;
    double best_mag = -1.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double mag = std::abs(v[i]);
        if (mag > best_mag) {
            best_mag = mag;
            best = i;
        }
    }
    if (!v.empty() && v[best] < 0.0) {
        for (double& x : v) x = -x;
        return true;
    }
    return false;
}

SymEigResult sym_eig(const DenseMatrix& input, double symmetry_tol) {
    if (input.rows() != input.cols()) {
        throw ValidationError("sym_eig: matrix is " + std::to_string(input.rows()) + "x" +
                              std::to_string(input.cols()) + ", expected square");
    }
    if (!input.all_finite()) throw ValidationError("sym_eig: non-finite input");
    if (asymmetry(input) > symmetry_tol) throw ValidationError("sym_eig: matrix is not symmetric");

    const std::size_t n = input.rows();
    DenseMatrix a = input;
    // Symmetrize exactly so rotations act on a truly symmetric matrix.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));
    DenseMatrix v = DenseMatrix::identity(n);

    const double scale = frobenius_norm(a);
    std::size_t sweep = 0;
    while (off_diagonal_norm(a) > kJacobiRelativeTolerance * scale) {
        if (sweep++ == kJacobiMaxSweeps) {
            throw NumericalError("sym_eig: no convergence after " +
                                 std::to_string(kJacobiMaxSweeps) + " sweeps");
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                a(p, p) -= t * apq;
                a(q, q) += t * apq;
                a(p, q) = a(q, p) = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r == p || r == q) continue;
                    const double g = a(r, p);
                    const double h = a(r, q);
                    a(r, p) = a(p, r) = g - s * (h + g * tau);
                    a(r, q) = a(q, r) = h + s * (g - h * tau);
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double g = v(r, p);
                    const double h = v(r, q);
                    v(r, p) = g - s * (h + g * tau);
                    v(r, q) = h + s * (g - h * tau);
                }
            }
        }
    }

    Vector diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i);
    const auto order = descending_order(diag);

    SymEigResult out{Vector(n), DenseMatrix(n, n)};
    for (std::size_t i = 0; i < n; ++i) {
        out.eigenvalues[i] = diag[order[i]];
        Vector col = v.column(order[i]);
        normalize_sign(col);
        out.eigenvectors.set_column(i, col);
    }
    if (!out.eigenvectors.all_finite()) throw NumericalError("sym_eig: non-finite eigenvectors");
    return out;
}

SvdResult thin_svd(const DenseMatrix& a) {
    if (a.empty()) throw ValidationError("thin_svd: empty matrix");
    if (!a.all_finite()) throw ValidationError("thin_svd: non-finite input");
    if (a.rows() >= a.cols()) return tall_svd(a);

    // a^T = U' S V'^T  =>  a = V' S U'^T
    SvdResult t = tall_svd(a.transpose());
    SvdResult out{t.vt.transpose(), std::move(t.sigma), t.u.transpose()};
    for (std::size_t i = 0; i < out.sigma.size(); ++i) {
        Vector u = out.u.column(i);
        if (normalize_sign(u)) {
            out.u.set_column(i, u);
            for (double& x : out.vt.row(i)) x = -x;
        }
    }
    return out;
}

DenseMatrix rank_k_truncate(const SvdResult& svd, std::size_t k) {
    if (k < 1 || k > svd.sigma.size()) {
        throw ValidationError("rank_k_truncate: k=" + std::to_string(k) + " outside [1, " +
                              std::to_string(svd.sigma.size()) + "]");
    }
    DenseMatrix us = svd.u.column_block(0, k);
    for (std::size_t r = 0; r < us.rows(); ++r)
        for (std::size_t c = 0; c < k; ++c) us(r, c) *= svd.sigma[c];
    return matmul(us, svd.vt.row_block(0, k));
}

DenseMatrix reconstruct(const SvdResult& svd) { return rank_k_truncate(svd, svd.sigma.size()); }

double orthonormality_error(const DenseMatrix& q) {
    DenseMatrix g = gram(q);
    for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
    return frobenius_norm(g);
}

std::size_t numerical_rank(const Vector& sigma, double rel_tol) {
    const double smax = sigma.empty() ? 0.0 : *std::max_element(sigma.begin(), sigma.end());
    if (smax <= 0.0) return 0;
    return static_cast<std::size_t>(
        std::count_if(sigma.begin(), sigma.end(), [&](double s) { return s > rel_tol * smax; }));
}

}  // namespace adns
