#pragma once

#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qlert/mesh.hpp"

namespace qlert {

// Closed-form fields on the annulus 1 < |x| < r with boundary data gamma * x1
// on |x| = r, gamma = 7 + 12 / r^2.
//   v: harmonic, zero on |x| = 1 (the PEC-limit solution).
//   w: minimizer of 3 int_{r>2} |grad w|^2 + 2 int_{1<|x|<2} |grad w|^2.
struct AnnulusFields {
    double r = 10.0;
    double gamma = 7.12;
    std::vector<std::string> warnings;

    double v(Point2 x) const;
    Point2 grad_v(Point2 x) const;
    double w(Point2 x) const;
    Point2 grad_w(Point2 x) const;

    // Coefficient K of v = K (1 - 1/|x|^2) x1.
    double v_coefficient() const;

    // Checks 1 <= |grad v| <= 10 on a polar sample of 2 <= |x| <= r.
    bool gradient_bounds_hold(int radial_samples = 64, int angular_samples = 64) const;
};

// Throws InvalidArgument for r <= 1; warns (but computes) for r < 10.
AnnulusFields annulus_fields(double r);

// Integral of f over the annulus rho1 < |x| < rho2 with a polar midpoint rule
// (uniform in log rho and theta), doubled until two Richardson-extrapolated
// values agree to rel_tol. Throws NonConvergence otherwise.
double polar_integral(const std::function<double(double rho, double theta)>& f, double rho1, double rho2,
                      double rel_tol = 1e-12);

// Energy density of the small-data counterexample: quadratic plateaus 2E^2 on
// [l'_n, L l'_n] and 3E^2 on [l''_n, L l''_n], joined by tangent-line bridges
// (plus E^2). The sequences decrease geometrically:
//   l'_n = l''_n / (c2 L),  l''_{n+1} = l'_n / (c1 L).
// Only `cycles` terms are stored; outside them Psi continues as 3E^2.
class CounterexampleModel {
public:
    static constexpr double kC1 = 2.0 + std::numbers::sqrt2;
    static constexpr double kC2 = 1.0 + std::numbers::sqrt2 / 2.0;
    static constexpr double kCSquared = 3.0 + 2.0 * std::numbers::sqrt2;  // c1 * c2

    CounterexampleModel(double big_l, double lambda_pp1, int cycles = 8);

    double big_l() const noexcept { return l_; }
    int cycles() const noexcept { return static_cast<int>(lambda_p_.size()); }
    // 1-based, as in the construction.
    double lambda_p(int n) const { return lambda_p_.at(static_cast<std::size_t>(n - 1)); }
    double lambda_pp(int n) const { return lambda_pp_.at(static_cast<std::size_t>(n - 1)); }

    double psi(double e) const;
    // Limit from the left (psi itself is right-continuous by construction).
    double psi_left(double e) const;
    // One-sided derivatives; equal away from breakpoints.
    double psi_slope_left(double e) const;
    double psi_slope_right(double e) const;
    // Ascending breakpoints of the piecewise definition.
    std::vector<double> breakpoints() const;

private:
    struct Piece {
        double lo, hi;
        double a, b, c;  // a E^2 + b E + c
    };
    const Piece& piece_at(double e, bool left) const;

    double l_;
    std::vector<double> lambda_p_, lambda_pp_;
    std::vector<Piece> pieces_;  // ascending, covering [0, inf)
};

// Validates L > 10 (needed so the gradient ranges fit inside the plateaus).
CounterexampleModel build_counterexample(double big_l, double lambda_pp1, int cycles = 8);

struct CounterexampleChecks {
    double ratio_error = 0.0;       // max relative error of l'_n / l''_n and l''_{n+1} / l'_n
    double continuity_error = 0.0;  // max |Psi(b-) - Psi(b+)| / Psi(b) over breakpoints b > 0
    double min_slope_jump = 0.0;    // min (Psi'(b+) - Psi'(b-)) / Psi'(b+); >= 0 when convex
    bool interleaved = false;       // L l''_{n+1} < l'_n < L l'_n < l''_n < L l''_n, breakpoints ascending

    bool ok(double tol) const {
        return interleaved && ratio_error <= tol && continuity_error <= tol && min_slope_jump >= -tol;
    }
};

CounterexampleChecks counterexample_checks(const CounterexampleModel& model);

struct CounterexampleEnergies {
    double r = 0.0;
    double ell1 = 0.0;  // 2 int_{D_r\D_2} |grad v|^2 + 3 int_{D_2\D_1} |grad v|^2
    double ell2 = 0.0;  // 3 int_{D_r\D_2} |grad w|^2 + 2 int_{D_2\D_1} |grad w|^2
    double margin = 0.0;  // ell2 - ell1
    bool separated = false;
    // Gradient integrals used above.
    double v_outer = 0.0, v_inner = 0.0, w_outer = 0.0, w_inner = 0.0;
    // Functional values along the sequences: G^{l'_n}(v) bounds the minimum
    // from above, H^{l''_n}(w) equals ell2 when the plateaus cover the ranges.
    std::vector<double> lambda_p, g_lambda_p;
    std::vector<double> lambda_pp, h_lambda_pp;
};

CounterexampleEnergies counterexample_energies(double r, const CounterexampleModel& model);

// int_{D_r\D_2} |grad v|^2 / int_{D_r\D_2} |grad w|^2, which tends to 1 as r grows.
double gradient_energy_ratio(double r);

struct AnnulusLevel {
    int refinement = 0;
    std::size_t nodes = 0;
    double rel_l2_error = 0.0;        // ||u_h - v|| / ||v|| over the annulus (quadrature of degree 4)
    double nodal_rel_l2_error = 0.0;  // same with v replaced by its P1 interpolant (superconvergent)
    double order = 0.0;         // observed order against the previous level (h halves per refinement step)
    int linear_iterations = 0;
    bool max_principle_ok = true;
};

// PEC-limit FEM solve on the annulus mesh (filled core as the perfect
// conductor, unit matrix conductivity, data gamma * x1 on |x| = r) compared
// with v at each refinement. Refinements must be increasing.
std::vector<AnnulusLevel> annulus_pec_validation(double r, std::span<const int> refinements);

}  // namespace qlert
