#pragma once

#include <cstddef>
#include <vector>

namespace qlert {

// Small row-major dense matrix (electrode-space sizes, at most a few dozen).
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);

    static DenseMatrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    const std::vector<double>& data() const noexcept { return data_; }

    DenseMatrix transposed() const;
    DenseMatrix symmetric_part() const;
    double max_abs() const;
    double frobenius() const;
    // max |a_ij - a_ji|; the matrix must be square.
    double asymmetry() const;

    DenseMatrix& operator+=(const DenseMatrix& o);
    DenseMatrix& operator-=(const DenseMatrix& o);
    DenseMatrix& operator*=(double s);

    friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
    friend DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
    friend DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }
    friend DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);
    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct SymmetricEigen {
    std::vector<double> values;  // ascending
    DenseMatrix vectors;         // column k belongs to values[k]
    int sweeps = 0;
};

// Cyclic Jacobi rotations on a symmetric matrix (only the upper triangle is
// read). Stops when the off-diagonal Frobenius norm falls below
// tol * frobenius(a). Throws InvalidArgument for non-square input and
// NonConvergence after max_sweeps.
SymmetricEigen jacobi_eigen(const DenseMatrix& a, double tol = 1e-15, int max_sweeps = 100);

// 2-norm of a symmetric matrix (largest |eigenvalue|).
double spectral_norm_symmetric(const DenseMatrix& a);

// Orthonormal basis (n x (n-1)) of the vectors with zero sum.
DenseMatrix zero_mean_basis(std::size_t n);

}  // namespace qlert
