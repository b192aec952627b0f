#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qlert/fem.hpp"
#include "qlert/materials.hpp"
#include "qlert/mesh.hpp"

namespace qlert {

enum class InitialGuess { zero, linear, provided };

struct NonlinearSolveConfig {
    int max_picard_iter = 500;
    double picard_tol = 1e-8;       // relative max-norm change of the nodal potential
    std::optional<double> damping;  // default: 0.7 if any E-J law has n >= 10, else 1
    double linear_tol = 1e-10;
    int linear_max_iter = 0;        // 0: CG default
    InitialGuess initial = InitialGuess::linear;
    std::vector<double> initial_field;  // nodal values, used with InitialGuess::provided

    void validate() const;
};

struct FieldSolution {
    std::vector<double> nodal_potential;  // NaN on removed (PEI) nodes
    std::vector<Point2> element_gradient;
    std::vector<double> element_sigma;    // conductivity of the last linearization, 0 on removed elements
    double energy = 0.0;
    int iterations = 0;
    int linear_iterations = 0;
    double damping = 1.0;
    std::vector<double> residuals;       // Picard change per iteration
    std::vector<double> energy_history;  // energy of each iterate, starting with the initial guess
    bool energy_descent_ok = true;
    bool max_principle_ok = true;
    std::vector<std::string> warnings;
};

// Number of energy-descent or maximum-principle violations seen by any solve
// in this process.
long solver_violation_count();
void reset_solver_violation_count();

// Dirichlet data on all nodes of the given boundary loops (all loops when empty).
DirichletBc boundary_dirichlet(const Mesh& mesh, const std::function<double(Point2)>& f,
                               std::vector<int> loops = {});

// Dirichlet data on electrode nodes: electrode k carries values[k].
DirichletBc electrode_dirichlet(const Mesh& mesh, std::span<const double> values);

// Picard (Kachanov) iteration: freeze sigma at the previous gradient, solve the
// weighted Laplace problem, relax with the damping factor. Regions listed in
// `treatment` are handled as PEC/PEI and need no material.
FieldSolution solve_nonlinear(const Mesh& mesh, const MaterialMap& materials, const DirichletBc& bc,
                              const NonlinearSolveConfig& config = {}, const LimitTreatment& treatment = {});

// Same with a prebuilt assembler (whose Dirichlet node list must match bc).
FieldSolution solve_nonlinear(const Assembler& assembler, const MaterialMap& materials, const DirichletBc& bc,
                              const NonlinearSolveConfig& config = {});

// Limiting problems: `matrix_material` is used on every region not replaced.
FieldSolution solve_pec_limit(const Mesh& mesh, const MaterialModel& matrix_material, const std::set<int>& pec_regions,
                              const DirichletBc& bc, const NonlinearSolveConfig& config = {});
FieldSolution solve_pei_limit(const Mesh& mesh, const MaterialModel& matrix_material, const std::set<int>& pei_regions,
                              const DirichletBc& bc, const NonlinearSolveConfig& config = {});

enum class LimitKind { pec, pei };

struct SweepPoint {
    double lambda = 0.0;
    double e2 = 0.0;
    double einf = 0.0;
    double g0 = 0.0;  // E(u^lambda) / lambda^p0
    int picard_iters = 0;
    bool ok = true;
    std::string error;
};

struct LambdaSweep {
    std::vector<SweepPoint> points;
    FieldSolution limit;
    double limit_energy = 0.0;  // energy of the limit solution over the unreplaced regions
    std::vector<std::string> warnings;
};

// For each lambda: solve with boundary data lambda * f, normalize, and compare
// with the limit solution over B (regions with label <= 0). Inclusions are the
// regions with positive labels. Failures are recorded per point.
LambdaSweep lambda_sweep(const Mesh& mesh, const MaterialMap& materials, const DirichletBc& f,
                         std::span<const double> lambdas, LimitKind limit, double p0,
                         const NonlinearSolveConfig& config = {});

// Decreasing log-uniform grid from hi to lo with `per_decade` points per decade.
std::vector<double> lambda_grid(double hi, double lo, int per_decade = 9);

}  // namespace qlert
