#include "adns/matrix.hpp"

#include "adns/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace adns {

namespace {

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ValidationError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) +
                              "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                              "x" + std::to_string(b.cols()));
    }
}

void require_finite(const DenseMatrix& m, const char* op) {
    if (!m.all_finite()) {
        throw NumericalError(std::string(op) + ": non-finite result");
    }
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ValidationError("DenseMatrix: data length " + std::to_string(data_.size()) +
                              " does not match " + std::to_string(rows_) + "x" +
                              std::to_string(cols_));
    }
    if (!all_finite()) {
        throw ValidationError("DenseMatrix: non-finite entry");
    }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> values) {
    DenseMatrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return m;
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw ValidationError("DenseMatrix::from_rows: ragged rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return DenseMatrix(r, c, std::move(data));
}

Vector DenseMatrix::column(std::size_t c) const {
    Vector out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
}

void DenseMatrix::set_column(std::size_t c, std::span<const double> values) {
    if (values.size() != rows_) throw ValidationError("set_column: length mismatch");
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = values[r];
}

DenseMatrix DenseMatrix::transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

DenseMatrix DenseMatrix::column_block(std::size_t first, std::size_t count) const {
    if (first + count > cols_) throw ValidationError("column_block: range out of bounds");
    DenseMatrix out(rows_, count);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < count; ++c) out(r, c) = (*this)(r, first + c);
    return out;
}

DenseMatrix DenseMatrix::row_block(std::size_t first, std::size_t count) const {
    if (first + count > rows_) throw ValidationError("row_block: range out of bounds");
    DenseMatrix out(count, cols_);
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(first * cols_), count * cols_,
                out.data_.begin());
    return out;
}

DenseMatrix DenseMatrix::gather_rows(std::span<const std::size_t> indices) const {
    DenseMatrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= rows_) throw ValidationError("gather_rows: index out of range");
        auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

bool DenseMatrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
    require_same_shape(*this, other, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
    require_same_shape(*this, other, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) noexcept {
    for (double& v : data_) v *= s;
    return *this;
}

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
DenseMatrix operator*(DenseMatrix a, double s) { return a *= s; }
DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw ValidationError("matmul: inner dimension mismatch");
    DenseMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto dst = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            auto src = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aik * src[j];
        }
    }
    require_finite(out, "matmul");
    return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows()) throw ValidationError("matmul_tn: row count mismatch");
    DenseMatrix out(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        auto arow = a.row(k);
        auto brow = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            auto dst = out.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aki * brow[j];
        }
    }
    require_finite(out, "matmul_tn");
    return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.cols()) throw ValidationError("matmul_nt: column count mismatch");
    DenseMatrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
    require_finite(out, "matmul_nt");
    return out;
}

DenseMatrix gram(const DenseMatrix& a) {
    const std::size_t n = a.cols();
    DenseMatrix out(n, n);
    for (std::size_t k = 0; k < a.rows(); ++k) {
        auto r = a.row(k);
        for (std::size_t i = 0; i < n; ++i) {
            const double ri = r[i];
            if (ri == 0.0) continue;
            for (std::size_t j = i; j < n; ++j) out(i, j) += ri * r[j];
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) out(i, j) = out(j, i);
    require_finite(out, "gram");
    return out;
}

DenseMatrix hconcat(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows()) throw ValidationError("hconcat: row count mismatch");
    DenseMatrix out(a.rows(), a.cols() + b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        auto dst = out.row(r);
        std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
        std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
    }
    return out;
}

DenseMatrix vconcat(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.cols()) throw ValidationError("vconcat: column count mismatch");
    std::vector<double> data = a.data();
    data.insert(data.end(), b.data().begin(), b.data().end());
    return DenseMatrix(a.rows() + b.rows(), a.cols(), std::move(data));
}

double frobenius_norm(const DenseMatrix& a) { return norm2(a.data()); }

double max_abs(const DenseMatrix& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::abs(v));
    return m;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

double inner(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "inner");
    return dot(a.data(), b.data());
}

double asymmetry(const DenseMatrix& a) {
    if (a.rows() != a.cols()) throw ValidationError("asymmetry: matrix is not square");
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - a(j, i)));
    return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace adns
