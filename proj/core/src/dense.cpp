#include "qlert/dense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qlert/error.hpp"

namespace qlert {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

DenseMatrix DenseMatrix::symmetric_part() const {
    if (!square()) throw InvalidArgument("symmetric_part: matrix is not square");
    DenseMatrix s(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) s(i, j) = 0.5 * ((*this)(i, j) + (*this)(j, i));
    return s;
}

double DenseMatrix::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

double DenseMatrix::frobenius() const {
    return std::sqrt(std::inner_product(data_.begin(), data_.end(), data_.begin(), 0.0));
}

double DenseMatrix::asymmetry() const {
    if (!square()) throw InvalidArgument("asymmetry: matrix is not square");
    double m = 0.0;
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = i + 1; j < cols_; ++j) m = std::max(m, std::abs((*this)(i, j) - (*this)(j, i)));
    return m;
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw InvalidArgument("matrix sizes differ");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw InvalidArgument("matrix sizes differ");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols_ != b.rows_) throw InvalidArgument("matrix product: inner sizes differ");
    DenseMatrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
        for (std::size_t k = 0; k < a.cols_; ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

SymmetricEigen jacobi_eigen(const DenseMatrix& input, double tol, int max_sweeps) {
    if (!input.square()) throw InvalidArgument("jacobi_eigen: matrix is not square");
    const std::size_t n = input.rows();
    DenseMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = input(i, j);
    for (double v : a.data()) {
        if (!std::isfinite(v)) throw InvalidArgument("jacobi_eigen: matrix has non-finite entries");
    }

    SymmetricEigen out;
    out.vectors = DenseMatrix::identity(n);
    DenseMatrix& q = out.vectors;
    const double scale = a.frobenius();
    auto off = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    while (scale > 0.0 && off() > tol * scale) {
        if (out.sweeps >= max_sweeps)
            throw NonConvergence("jacobi_eigen: no convergence in " + std::to_string(max_sweeps) + " sweeps", {});
        ++out.sweeps;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t r = p + 1; r < n; ++r) {
                const double apr = a(p, r);
                if (apr == 0.0) continue;
                // Rotation angle from the symmetric Schur decomposition.
                const double theta = (a(r, r) - a(p, p)) / (2.0 * apr);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akr = a(k, r);
                    a(k, p) = c * akp - s * akr;
                    a(k, r) = s * akp + c * akr;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), ark = a(r, k);
                    a(p, k) = c * apk - s * ark;
                    a(r, k) = s * apk + c * ark;
                }
                a(p, r) = a(r, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double qkp = q(k, p), qkr = q(k, r);
                    q(k, p) = c * qkp - s * qkr;
                    q(k, r) = s * qkp + c * qkr;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
    DenseMatrix sorted(n, n);
    out.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) sorted(i, k) = q(i, order[k]);
    }
    out.vectors = std::move(sorted);
    return out;
}

double spectral_norm_symmetric(const DenseMatrix& a) {
    auto eig = jacobi_eigen(a);
    if (eig.values.empty()) return 0.0;
    return std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
}

DenseMatrix zero_mean_basis(std::size_t n) {
    if (n < 2) throw InvalidArgument("zero_mean_basis: need at least two components");
    // Helmert vectors: column k is (1, ..., 1, -k, 0, ...) / sqrt(k (k + 1)).
    DenseMatrix q(n, n - 1);
    for (std::size_t k = 1; k < n; ++k) {
        const double s = 1.0 / std::sqrt(static_cast<double>(k) * static_cast<double>(k + 1));
        for (std::size_t i = 0; i < k; ++i) q(i, k - 1) = s;
        q(k, k - 1) = -static_cast<double>(k) * s;
    }
    return q;
}

}  // namespace qlert
