#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "qlert/dense.hpp"
#include "qlert/materials.hpp"
#include "qlert/mesh.hpp"
#include "qlert/solver.hpp"

namespace qlert {

// Electrode-space conductance matrix: entry (i, j) is the current collected on
// electrode i per volt of the zero-mean pattern centred on electrode j.
struct ConductanceMatrix {
    DenseMatrix g;             // symmetrized
    double amplitude = 0.0;    // V
    double asymmetry = 0.0;    // max |G_ij - G_ji| / max |G_ij| before symmetrization
    std::string mesh_id;
    std::string scenario_id;
    long picard_iterations = 0;
};

enum class ForwardModel { nonlinear, pec_limit };

struct ConductanceOptions {
    ForwardModel model = ForwardModel::nonlinear;
    double amplitude = 1e-3;
    NonlinearSolveConfig solver;
    // PEC regions for ForwardModel::pec_limit; empty means every inclusion.
    std::set<int> pec_regions;
    int threads = 1;
    std::string scenario_id;
};

// One solve per electrode: +amplitude on electrode j, all electrodes shifted
// to zero mean, gaps insulating. Solver failures are rethrown with the
// pattern index in the message.
ConductanceMatrix conductance_matrix(const Mesh& mesh, const MaterialMap& materials, const ConductanceOptions& options);

struct PsdCheck {
    bool psd = false;
    double min_eigenvalue = 0.0;
};

// Minimum eigenvalue by Jacobi rotations; psd when it is >= -tol. Throws
// InvalidArgument when the matrix is not square or its asymmetry exceeds
// symmetry_tol * max|m_ij|.
PsdCheck is_psd(const DenseMatrix& m, double tol, double symmetry_tol = 1e-10);

// Q' M Q with Q an orthonormal basis of the zero-sum vectors (removes the
// all-ones direction, which carries no information for grounded data).
DenseMatrix deflate_constant(const DenseMatrix& m);

// eta * dg_max * A with A from the Gaussian orthogonal ensemble: independent
// upper-triangle entries N(0, 1), diagonal N(0, 2). Deterministic in `seed`.
DenseMatrix goe_noise(std::size_t size, double eta, double dg_max, std::uint64_t seed);

// max_ij |a_ij - b_ij|.
double max_abs_difference(const DenseMatrix& a, const DenseMatrix& b);

struct TestDomain {
    int id = 0;
    Point2 center;
    double radius = 0.0;
    ElementMask mask;  // matrix-region elements with centroid inside the disc
};

// Matrix-region (label 0) elements whose centroid lies inside the disc.
ElementMask disc_mask(const Mesh& mesh, Point2 center, double radius);

// Discs of each radius centred on a square grid of the given spacing (through
// the origin) that fit inside the outer boundary. Empty masks are dropped.
std::vector<TestDomain> disc_test_domains(const Mesh& mesh, std::span<const double> radii, double spacing);

// Copy of `mesh` with the matrix elements of `mask` relabelled as defect `index`.
Mesh with_defect(const Mesh& mesh, const ElementMask& mask, int index = 1);

// Conductance matrices of the test domains: each domain is inserted as a
// defect of conductivity `defect` into the matrix `background`, and every
// inclusion is replaced by a perfect conductor.
std::vector<ConductanceMatrix> test_domain_matrices(const Mesh& mesh, std::span<const TestDomain> domains,
                                                    const MaterialModel& background, const MaterialModel& defect,
                                                    const ConductanceOptions& options);

struct Reconstruction {
    double delta = 0.0;
    // Per test domain: minimum eigenvalue of G_T - G_measured + delta I on the
    // zero-mean subspace (the acceptance test) and on the full electrode space.
    std::vector<double> min_eigenvalue;
    std::vector<double> min_eigenvalue_full;
    std::vector<int> accepted;  // indices k with min_eigenvalue[k] >= -tol
    ElementMask union_mask;
};

// Monotonicity test for a conductivity drop: T inside V implies G_T >= G_V, so
// T_k is kept unless G_{T_k} - G_measured + delta I fails to be positive
// semidefinite. The upper bound is the union of the kept domains.
Reconstruction mpm_reconstruct(const DenseMatrix& g_measured, std::span<const DenseMatrix> test_matrices,
                               std::span<const ElementMask> test_masks, double delta, double tol);

struct ReconstructionMetrics {
    double coverage = 0.0;  // |V cap U| / |V|, by area
    double excess = 0.0;    // |U \ V| / |V|
    bool upper_bound = false;  // every element of V is in U
};

ReconstructionMetrics reconstruction_metrics(const Mesh& mesh, const ElementMask& truth, const ElementMask& estimate);

}  // namespace qlert
