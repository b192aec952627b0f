#include "qlert/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "qlert/error.hpp"

namespace qlert {

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    if (!row_sum.empty()) {
        for (std::size_t i = 0; i < rows; ++i) {
            double s = row_sum[i] * x[i];
            for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
                s += val[k] * (x[static_cast<std::size_t>(col[k])] - x[i]);
            y[i] = s;
        }
        return;
    }
    for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0;
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[static_cast<std::size_t>(col[k])];
        y[i] = s;
    }
}

std::vector<double> CsrMatrix::diagonal() const {
    std::vector<double> d(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) d[i] = at(i, i);
    return d;
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
    auto first = col.begin() + static_cast<long>(row_ptr[i]);
    auto last = col.begin() + static_cast<long>(row_ptr[i + 1]);
    auto it = std::lower_bound(first, last, static_cast<int>(j));
    if (it == last || *it != static_cast<int>(j)) return 0.0;
    return val[static_cast<std::size_t>(it - col.begin())];
}

CsrMatrix CsrMatrix::from_triplets(std::size_t n, std::span<const int> rows, std::span<const int> cols,
                                   std::span<const double> vals) {
    if (rows.size() != cols.size() || rows.size() != vals.size())
        throw InvalidArgument("from_triplets: array lengths differ");
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::pair(rows[a], cols[a]) < std::pair(rows[b], cols[b]);
    });
    CsrMatrix m;
    m.rows = n;
    m.row_ptr.assign(n + 1, 0);
    int last_r = -1, last_c = -1;
    for (auto k : order) {
        int r = rows[k], c = cols[k];
        if (r < 0 || c < 0 || static_cast<std::size_t>(r) >= n || static_cast<std::size_t>(c) >= n)
            throw InvalidArgument("from_triplets: index out of range");
        if (r == last_r && c == last_c) {
            m.val.back() += vals[k];
            continue;
        }
        m.col.push_back(c);
        m.val.push_back(vals[k]);
        ++m.row_ptr[static_cast<std::size_t>(r) + 1];
        last_r = r;
        last_c = c;
    }
    for (std::size_t i = 0; i < n; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
    return m;
}

namespace {

// Additive coarse space built from indicator vectors of unknown groups.
class CoarseSpace {
public:
    CoarseSpace(const CsrMatrix& a, const std::vector<std::vector<int>>& groups) : groups_(groups) {
        const std::size_t m = groups_.size();
        if (m == 0) return;
        std::vector<int> owner(a.rows, -1);
        for (std::size_t g = 0; g < m; ++g) {
            for (int i : groups_[g]) {
                if (i < 0 || static_cast<std::size_t>(i) >= a.rows)
                    throw InvalidArgument("solve_cg: coarse group index out of range");
                if (owner[static_cast<std::size_t>(i)] != -1) throw InvalidArgument("solve_cg: coarse groups overlap");
                owner[static_cast<std::size_t>(i)] = static_cast<int>(g);
            }
        }
        // Galerkin matrix Z'AZ, then its Cholesky factor. With row sums the
        // diagonal is built from the couplings leaving each group, which avoids
        // summing large entries that cancel.
        chol_.assign(m * m, 0.0);
        const bool sums = !a.row_sum.empty();
        for (std::size_t i = 0; i < a.rows; ++i) {
            const int gi = owner[i];
            if (gi < 0) continue;
            const std::size_t d = static_cast<std::size_t>(gi) * (m + 1);
            if (sums) chol_[d] += a.row_sum[i];
            for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
                const int gj = owner[static_cast<std::size_t>(a.col[k])];
                if (sums) {
                    if (gj == gi) continue;
                    chol_[d] -= a.val[k];
                }
                if (gj >= 0) chol_[static_cast<std::size_t>(gi) * m + static_cast<std::size_t>(gj)] += a.val[k];
            }
        }
        for (std::size_t j = 0; j < m; ++j) {
            double d = chol_[j * m + j];
            for (std::size_t k = 0; k < j; ++k) d -= chol_[j * m + k] * chol_[j * m + k];
            if (!(d > 0.0)) throw InvalidArgument("solve_cg: coarse matrix is not positive definite");
            chol_[j * m + j] = std::sqrt(d);
            for (std::size_t i = j + 1; i < m; ++i) {
                double s = chol_[i * m + j];
                for (std::size_t k = 0; k < j; ++k) s -= chol_[i * m + k] * chol_[j * m + k];
                chol_[i * m + j] = s / chol_[j * m + j];
            }
        }
        rhs_.resize(m);
    }

    // z += Z (Z'AZ)^-1 Z' r
    void apply(std::span<const double> r, std::span<double> z) {
        const std::size_t m = groups_.size();
        if (m == 0) return;
        for (std::size_t g = 0; g < m; ++g) {
            double s = 0.0;
            for (int i : groups_[g]) s += r[static_cast<std::size_t>(i)];
            rhs_[g] = s;
        }
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t k = 0; k < i; ++k) rhs_[i] -= chol_[i * m + k] * rhs_[k];
            rhs_[i] /= chol_[i * m + i];
        }
        for (std::size_t i = m; i-- > 0;) {
            for (std::size_t k = i + 1; k < m; ++k) rhs_[i] -= chol_[k * m + i] * rhs_[k];
            rhs_[i] /= chol_[i * m + i];
        }
        for (std::size_t g = 0; g < m; ++g) {
            for (int i : groups_[g]) z[static_cast<std::size_t>(i)] += rhs_[g];
        }
    }

private:
    const std::vector<std::vector<int>>& groups_;
    std::vector<double> chol_;
    std::vector<double> rhs_;
};

}  // namespace

CgResult solve_cg(const CsrMatrix& a, std::span<const double> b, std::span<double> x, const CgOptions& options) {
    const std::size_t n = a.rows;
    if (b.size() != n || x.size() != n) throw InvalidArgument("solve_cg: vector size does not match matrix");
    if (!(options.tol > 0.0)) throw InvalidArgument("solve_cg: tolerance must be positive");
    if (!a.row_sum.empty() && a.row_sum.size() != n) throw InvalidArgument("solve_cg: row sums have the wrong size");
    CgResult result;
    if (n == 0) return result;

    std::vector<double> inv_diag = a.diagonal();
    for (std::size_t i = 0; i < n; ++i) {
        if (!(inv_diag[i] > 0.0)) {
            std::ostringstream msg;
            msg << "solve_cg: diagonal entry " << i << " is not positive (" << inv_diag[i] << ")";
            throw InvalidArgument(msg.str());
        }
        inv_diag[i] = 1.0 / inv_diag[i];
    }
    const int max_iter = options.max_iter > 0 ? options.max_iter : static_cast<int>(10 * n + 100);

    CoarseSpace coarse(a, options.coarse_groups);
    std::vector<double> r(n), z(n), p(n), ap(n);
    auto precondition = [&] {
        for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        coarse.apply(r, z);
    };

    std::copy(b.begin(), b.end(), r.begin());
    precondition();
    double b_norm = std::sqrt(std::max(0.0, std::inner_product(r.begin(), r.end(), z.begin(), 0.0)));
    if (b_norm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return result;
    }

    a.multiply(x, r);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    auto functional = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s -= 0.5 * x[i] * (b[i] + r[i]);
        return s;
    };
    precondition();
    std::copy(z.begin(), z.end(), p.begin());
    double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
    result.relative_residual = std::sqrt(rz) / b_norm;
    result.residual_history.push_back(result.relative_residual);
    result.functional_history.push_back(functional());

    while (result.relative_residual > options.tol) {
        if (result.iterations >= max_iter) {
            std::ostringstream msg;
            msg << "conjugate gradients did not converge in " << max_iter << " iterations (relative residual "
                << result.relative_residual << ", tolerance " << options.tol << ")";
            throw NonConvergence(msg.str(), result.residual_history);
        }
        a.multiply(p, ap);
        const double pap = std::inner_product(p.begin(), p.end(), ap.begin(), 0.0);
        if (!(pap > 0.0)) {
            if (std::isnan(pap)) throw NumericalBreakdown("solve_cg: NaN in iteration", -1);
            throw InvalidArgument("solve_cg: matrix is not positive definite");
        }
        const double alpha = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precondition();
        const double rz_new = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        ++result.iterations;
        result.relative_residual = std::sqrt(std::max(rz, 0.0)) / b_norm;
        result.residual_history.push_back(result.relative_residual);
        result.functional_history.push_back(functional());
    }
    return result;
}

}  // namespace qlert
