#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qlert {

// Compressed sparse row matrix. Column indices are sorted within each row.
struct CsrMatrix {
    std::size_t rows = 0;
    std::vector<std::size_t> row_ptr;
    std::vector<int> col;
    std::vector<double> val;
    // Optional exact row sums. When present, multiply() evaluates
    // s_i x_i + sum_j a_ij (x_j - x_i), which stays accurate for Laplacian-like
    // matrices whose entries span many orders of magnitude.
    std::vector<double> row_sum;

    void multiply(std::span<const double> x, std::span<double> y) const;
    std::vector<double> diagonal() const;
    double at(std::size_t i, std::size_t j) const;  // 0 for structural zeros

    // Build from (row, col, value) triplets; duplicates are summed.
    static CsrMatrix from_triplets(std::size_t n, std::span<const int> rows, std::span<const int> cols,
                                   std::span<const double> vals);
};

struct CgOptions {
    double tol = 1e-10;  // relative residual, see CgResult
    int max_iter = 0;    // 0 means 10 * size + 100
    // Disjoint groups of unknowns. Each group adds its indicator vector to an
    // additive coarse correction D^-1 + Z (Z'AZ)^-1 Z', which removes the
    // near-null modes of highly conducting inclusions.
    std::vector<std::vector<int>> coarse_groups;
};

struct CgResult {
    int iterations = 0;
    // Residual relative to the right-hand side, both measured in the
    // preconditioner norm sqrt(r' M^-1 r). The scaling keeps rows with very
    // different conductivities on an equal footing.
    double relative_residual = 0.0;
    std::vector<double> residual_history;
    // Quadratic functional x'Ax/2 - b'x after each iteration; nonincreasing in
    // exact arithmetic.
    std::vector<double> functional_history;
};

// Jacobi (optionally two-level) preconditioned conjugate gradients for a symmetric positive definite
// matrix. `x` holds the initial guess on entry and the solution on exit.
// Throws NonConvergence (carrying the residual history) when max_iter is hit,
// InvalidArgument on size mismatch or non-positive diagonal entries.
CgResult solve_cg(const CsrMatrix& a, std::span<const double> b, std::span<double> x, const CgOptions& options = {});

}  // namespace qlert
