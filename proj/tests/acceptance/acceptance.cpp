// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qlert/electrodes.hpp"
#include "qlert/error.hpp"
#include "qlert/oracle.hpp"
#include "qlert/scenario.hpp"
#include "qlert/solver.hpp"
#include "qlert/tomography.hpp"

using namespace qlert;

namespace {

// Pinned tolerances.
constexpr double kAnnulusMaxRelL2 = 1e-2;
constexpr double kAnnulusMinOrder = 1.9;
constexpr double kCounterexampleTol = 1e-12;
constexpr double kSweepSeparation = 10.0;
constexpr double kHomogeneityFactor = 10.0;   // times the linear-solver tolerance
constexpr double kMonotonicityFactor = 10.0;  // times the linear-solver tolerance, relative to max|G|
constexpr int kMonotonicityPairs = 6;
constexpr double kTangentialMax = 0.05;
constexpr double kNoiseEta = 0.01;
constexpr double kExcitation = 1e-3;
constexpr int kElectrodes = 16;
constexpr double kTestRadius = 6e-5;
constexpr double kTestSpacing = 6e-5;
constexpr double kPsdTolRel = 1e-9;

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int g_failures = 0;

void run(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_time = secs <= budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++g_failures;
    std::printf("[%s] %d %s: %s; %.1f s (budget %.0f s)\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs,
                budget_s);
    std::fflush(stdout);
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

Outcome annulus_validation() {
    const std::vector<int> levels{2, 3, 4};
    const auto rows = annulus_pec_validation(10.0, levels);
    const double err = rows.back().rel_l2_error;
    double min_order = rows[1].order;
    for (std::size_t k = 1; k < rows.size(); ++k) min_order = std::min(min_order, rows[k].order);
    const bool ok = err <= kAnnulusMaxRelL2 && min_order >= kAnnulusMinOrder;
    return {ok, "rel L2 error at level 4 " + num(err) + " <= " + num(kAnnulusMaxRelL2) + ", min order " +
                    num(min_order) + " >= " + num(kAnnulusMinOrder)};
}

Outcome counterexample() {
    const CounterexampleModel m = build_counterexample(20.0, 1.0, 6);
    const CounterexampleChecks c = counterexample_checks(m);
    const double radii[] = {10.0, 20.0, 40.0};
    bool separated = true, growing = true;
    double prev_margin = -1.0, ell1 = 0.0, ell2 = 0.0;
    for (double r : radii) {
        const CounterexampleEnergies e = counterexample_energies(r, m);
        if (r == 10.0) ell1 = e.ell1, ell2 = e.ell2;
        separated = separated && e.ell1 < e.ell2;
        growing = growing && e.margin > prev_margin;
        prev_margin = e.margin;
    }
    bool ratio_monotone = true;
    double prev_gap = INFINITY, last_ratio = 0.0;
    for (double r : {10.0, 100.0, 1000.0}) {
        last_ratio = gradient_energy_ratio(r);
        const double gap = std::abs(last_ratio - 1.0);
        ratio_monotone = ratio_monotone && gap < prev_gap;
        prev_gap = gap;
    }
    const bool ok = c.ok(kCounterexampleTol) && separated && growing && ratio_monotone;
    return {ok, "ratio err " + num(c.ratio_error) + ", continuity err " + num(c.continuity_error) + ", min slope jump " +
                    num(c.min_slope_jump) + " (tol " + num(kCounterexampleTol) + "), interleaved " +
                    (c.interleaved ? "yes" : "no") + ", l1 " + num(ell1) + " < l2 " + num(ell2) + ", margins growing " +
                    (growing ? "yes" : "no") + ", ratio at r=1000 " + num(last_ratio) + " monotone " +
                    (ratio_monotone ? "yes" : "no")};
}

Outcome pec_sweep() {
    const CableScenario s = CableScenario::reference(2);
    const Mesh mesh = s.mesh();
    const DirichletBc f = s.x_linear(mesh, 1.0);
    const auto lambdas = lambda_grid(1e-1, 1e-8, 3);
    NonlinearSolveConfig cfg;
    const LambdaSweep sw = lambda_sweep(mesh, s.materials(mesh), f, lambdas, LimitKind::pec, 2.0, cfg);
    const double slack = cfg.linear_tol;
    bool all_ok = true, monotone = true;
    for (std::size_t k = 0; k < sw.points.size(); ++k) {
        all_ok = all_ok && sw.points[k].ok;
        if (k > 0) {
            monotone = monotone && sw.points[k].e2 <= sw.points[k - 1].e2 + slack &&
                       sw.points[k].einf <= sw.points[k - 1].einf + slack;
        }
    }
    const auto at = [&](double v0) {
        const auto it = std::min_element(sw.points.begin(), sw.points.end(), [&](const SweepPoint& a, const SweepPoint& b) {
            return std::abs(std::log10(a.lambda / v0)) < std::abs(std::log10(b.lambda / v0));
        });
        return it->e2;
    };
    const double hi = at(1e-2), lo = at(1e-6);
    const bool ok = all_ok && monotone && hi >= kSweepSeparation * lo;
    return {ok, std::to_string(sw.points.size()) + " points, all converged " + (all_ok ? "yes" : "no") +
                    ", e2/einf nonincreasing (slack " + num(slack) + ") " + (monotone ? "yes" : "no") + ", e2(1e-2) " +
                    num(hi) + " / e2(1e-6) " + num(lo) + " = " + num(hi / lo) + " >= " + num(kSweepSeparation)};
}

Outcome homogeneity() {
    const CableScenario s = CableScenario::reference(2);
    const Mesh mesh = s.mesh();
    MaterialMap mat{{0, MaterialModel::weighted_power(1.0, 2.0)}};
    for (int label : s.petal_labels()) mat.emplace(label, MaterialModel::weighted_power(1e3, 2.0));
    NonlinearSolveConfig cfg;
    const DirichletBc f = s.x_linear(mesh, 1.0);
    const auto ref = solve_nonlinear(mesh, mat, f, cfg).nodal_potential;
    double scale = 0.0;
    for (double v : ref) scale = std::max(scale, std::abs(v));
    double worst = 0.0;
    for (double lambda : {1e-1, 1e-2, 1e-3, 1e-4}) {
        DirichletBc bc = f;
        for (double& v : bc.values) v *= lambda;
        const auto u = solve_nonlinear(mesh, mat, bc, cfg).nodal_potential;
        for (std::size_t i = 0; i < u.size(); ++i) worst = std::max(worst, std::abs(u[i] / lambda - ref[i]) / scale);
    }
    const double bound = kHomogeneityFactor * cfg.linear_tol;
    return {worst <= bound, "max |v^lambda - v^1| / max|v^1| over lambda in [1e-4, 1] = " + num(worst) + " <= " + num(bound)};
}

Outcome nested_monotonicity() {
    const CableScenario s = CableScenario::reference(2);
    const Mesh mesh = tag_electrodes(s.mesh(), ElectrodeLayout::uniform(kElectrodes, 0.5));
    ConductanceOptions opt;
    opt.model = ForwardModel::pec_limit;
    opt.amplitude = kExcitation;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<TestDomain> domains;
    while (domains.size() < 2 * kMonotonicityPairs) {
        const double rho = 5.5e-4 * std::sqrt(unit(rng)), phi = 2.0 * M_PI * unit(rng);
        const double radius = 4e-5 + 1.1e-4 * unit(rng);
        const Point2 c{rho * std::cos(phi), rho * std::sin(phi)};
        if (rho + radius > 5.9e-4) continue;
        const ElementMask outer = disc_mask(mesh, c, radius);
        ElementMask inner(outer.size(), 0);
        std::size_t n_outer = 0, n_inner = 0;
        for (std::size_t e = 0; e < outer.size(); ++e) {
            if (!outer[e]) continue;
            ++n_outer;
            if (unit(rng) < 0.5) inner[e] = 1, ++n_inner;
        }
        if (n_outer < 2 || n_inner == 0 || n_inner == n_outer) continue;
        TestDomain a, b;
        a.center = b.center = c;
        a.radius = b.radius = radius;
        a.mask = inner;
        b.mask = outer;
        domains.push_back(a);
        domains.push_back(b);
    }
    const auto g = test_domain_matrices(mesh, domains, s.matrix_material(), s.defect_material(), opt);
    double worst_rel = INFINITY;
    bool ok = true;
    for (int k = 0; k < kMonotonicityPairs; ++k) {
        const DenseMatrix& g1 = g[2 * k].g;
        const DenseMatrix& g2 = g[2 * k + 1].g;
        const DenseMatrix diff = g1 - g2;
        const double scale = std::max(g1.max_abs(), g2.max_abs());
        const double tol = kMonotonicityFactor * opt.solver.linear_tol * scale;
        const double full = jacobi_eigen(diff).values.front();
        const double deflated = jacobi_eigen(deflate_constant(diff)).values.front();
        ok = ok && full >= -tol && deflated >= -tol;
        worst_rel = std::min(worst_rel, std::min(full, deflated) / scale);
    }
    return {ok, std::to_string(kMonotonicityPairs) + " nested pairs, min eig(G_V1 - G_V2) / max|G| = " + num(worst_rel) +
                    " >= -" + num(kMonotonicityFactor * NonlinearSolveConfig{}.linear_tol)};
}

Outcome mpm_upper_bound() {
    const CableScenario s = CableScenario::reference(2);
    const Mesh mesh = tag_electrodes(s.mesh(), ElectrodeLayout::uniform(kElectrodes, 0.5));
    ConductanceOptions opt;
    opt.amplitude = kExcitation;
    const double radii[] = {kTestRadius};
    const std::vector<TestDomain> domains = disc_test_domains(mesh, radii, kTestSpacing);
    const auto tests = test_domain_matrices(mesh, domains, s.matrix_material(), s.defect_material(), opt);
    std::vector<DenseMatrix> test_g;
    std::vector<ElementMask> masks;
    for (std::size_t k = 0; k < domains.size(); ++k) {
        test_g.push_back(tests[k].g);
        masks.push_back(domains[k].mask);
    }
    opt.model = ForwardModel::nonlinear;
    const DenseMatrix bg = conductance_matrix(mesh, s.materials(mesh), opt).g;
    const double tol = kPsdTolRel * bg.max_abs();

    // Defects are unions of dictionary discs.
    const std::vector<std::vector<Point2>> scenarios{
        {{0.0, 3e-4}},
        {{-2.4e-4, -3e-4}, {-1.8e-4, -3e-4}},
        {{3e-4, 1.8e-4}, {3.6e-4, 1.8e-4}, {3e-4, 2.4e-4}},
    };
    int runs = 0, bounded = 0;
    double min_cov = 1.0, max_excess = 0.0;
    for (const auto& discs : scenarios) {
        ElementMask truth(mesh.element_count(), 0);
        for (const Point2 c : discs) {
            const ElementMask m = disc_mask(mesh, c, kTestRadius);
            for (std::size_t e = 0; e < truth.size(); ++e) truth[e] |= m[e];
        }
        const Mesh defected = with_defect(mesh, truth, 1);
        const DenseMatrix gv = conductance_matrix(defected, s.materials(defected), opt).g;
        const double dg = max_abs_difference(gv, bg);
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            const DenseMatrix noise = goe_noise(kElectrodes, kNoiseEta, dg, seed);
            const double delta = spectral_norm_symmetric(noise);
            const Reconstruction rec = mpm_reconstruct(gv + noise, test_g, masks, delta, tol);
            const ReconstructionMetrics m = reconstruction_metrics(mesh, truth, rec.union_mask);
            ++runs;
            bounded += m.upper_bound ? 1 : 0;
            min_cov = std::min(min_cov, m.coverage);
            max_excess = std::max(max_excess, m.excess);
        }
    }
    return {bounded == runs && runs >= 9, std::to_string(bounded) + "/" + std::to_string(runs) +
                                              " runs with V inside the estimate (3 defects x 3 seeds, " +
                                              std::to_string(domains.size()) + " test discs), min coverage " +
                                              num(min_cov) + ", max excess " + num(max_excess)};
}

Outcome field_orthogonality() {
    const CableScenario s = CableScenario::reference(2);
    const Mesh mesh = s.mesh();
    const FieldSolution sol = solve_nonlinear(mesh, s.materials(mesh), s.x_linear(mesh, 1e-6));
    const InterfaceField f = interface_tangential_ratio(mesh, sol.element_gradient, s.petal_labels());
    return {!f.elements.empty() && f.max_ratio <= kTangentialMax,
            "max |E_t|/|E| on " + std::to_string(f.elements.size()) + " petal-boundary elements " + num(f.max_ratio) +
                " <= " + num(kTangentialMax) + " (mean " + num(f.mean_ratio) + ")"};
}

}  // namespace

int main() {
    reset_solver_violation_count();
    run(1, "annulus FEM against the closed form", 30, annulus_validation);
    run(2, "counterexample ingredients", 10, counterexample);
    run(3, "PEC-limit convergence on the cable", 600, pec_sweep);
    run(4, "homogeneity of a p0 = 2 weighted power", 60, homogeneity);
    run(5, "discrete monotonicity on nested defects", 300, nested_monotonicity);
    run(6, "monotonicity-method upper bound", 900, mpm_upper_bound);
    run(7, "field orthogonality at the PEC limit", 60, field_orthogonality);
    run(8, "energy descent and maximum principle", 1, [] {
        const long v = solver_violation_count();
        return Outcome{v == 0, std::to_string(v) + " violations logged across the solves above"};
    });
    std::printf("%s: %d failing criteria\n", g_failures == 0 ? "ACCEPTED" : "REJECTED", g_failures);
    return g_failures == 0 ? 0 : 1;
}
