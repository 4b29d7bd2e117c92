#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace adns {

using Vector = std::vector<double>;

/// Row-major dense real matrix. Zero-sized dimensions are allowed so that an
/// empty basis (d x 0) is representable.
class DenseMatrix {
  public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols);
    /// Throws ValidationError if `data.size() != rows * cols` or any entry is non-finite.
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static DenseMatrix identity(std::size_t n);
    static DenseMatrix diagonal(std::span<const double> values);
    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    Vector column(std::size_t c) const;
    void set_column(std::size_t c, std::span<const double> values);

    const std::vector<double>& data() const noexcept { return data_; }
    std::span<double> values() noexcept { return data_; }

    DenseMatrix transpose() const;
    /// Columns [first, first + count).
    DenseMatrix column_block(std::size_t first, std::size_t count) const;
    /// Rows [first, first + count).
    DenseMatrix row_block(std::size_t first, std::size_t count) const;
    DenseMatrix gather_rows(std::span<const std::size_t> indices) const;

    bool all_finite() const noexcept;

    DenseMatrix& operator+=(const DenseMatrix& other);
    DenseMatrix& operator-=(const DenseMatrix& other);
    DenseMatrix& operator*=(double s) noexcept;

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(DenseMatrix a, double s);
DenseMatrix operator*(double s, DenseMatrix a);

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// a^T * b without materializing the transpose.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
/// a * b^T without materializing the transpose.
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
/// a^T * a, exactly symmetric.
DenseMatrix gram(const DenseMatrix& a);
/// [a, b] side by side; row counts must match.
DenseMatrix hconcat(const DenseMatrix& a, const DenseMatrix& b);
/// a stacked over b; column counts must match.
DenseMatrix vconcat(const DenseMatrix& a, const DenseMatrix& b);

double frobenius_norm(const DenseMatrix& a);
double max_abs(const DenseMatrix& a);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
/// Frobenius inner product sum_ij a_ij b_ij.
double inner(const DenseMatrix& a, const DenseMatrix& b);
/// max |a - a^T|.
double asymmetry(const DenseMatrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace adns
