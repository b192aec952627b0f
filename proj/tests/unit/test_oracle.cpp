#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "qlert/error.hpp"
#include "qlert/oracle.hpp"

using namespace qlert;

namespace {

constexpr double kPi = std::numbers::pi;

// int over rho1 < |x| < rho2 of |grad((a + b / rho^2) x1)|^2, by hand.
double radial_energy(double a, double b, double rho1, double rho2) {
    return kPi * (a * a * (rho2 * rho2 - rho1 * rho1) + b * b * (1.0 / (rho1 * rho1) - 1.0 / (rho2 * rho2)));
}

double laplacian(const std::function<double(Point2)>& u, Point2 p, double h) {
    return (u({p.x + h, p.y}) + u({p.x - h, p.y}) + u({p.x, p.y + h}) + u({p.x, p.y - h}) - 4.0 * u(p)) / (h * h);
}

Point2 polar(double rho, double theta) { return {rho * std::cos(theta), rho * std::sin(theta)}; }

}  // namespace

TEST_CASE("annulus fields: boundary values") {
    const AnnulusFields f = annulus_fields(10.0);
    CHECK(f.gamma == doctest::Approx(7.12));
    CHECK(f.v_coefficient() == doctest::Approx(712.0 / 99.0).epsilon(1e-14));
    CHECK(f.v({1.0, 0.0}) == doctest::Approx(0.0));
    CHECK(f.v({10.0, 0.0}) == doctest::Approx(71.2).epsilon(1e-14));
    CHECK(f.w({10.0, 0.0}) == doctest::Approx(71.2).epsilon(1e-14));
    CHECK(f.warnings.empty());
    for (double t = 0.0; t < 2.0 * kPi; t += 0.3) {
        CHECK(std::abs(f.v(polar(1.0, t))) <= 1e-12);
        CHECK(f.v(polar(10.0, t)) == doctest::Approx(7.12 * 10.0 * std::cos(t)).scale(1.0));
        CHECK(f.w(polar(10.0, t)) == doctest::Approx(7.12 * 10.0 * std::cos(t)).scale(1.0));
    }
}

TEST_CASE("annulus fields: harmonic, and w satisfies the interface and Neumann conditions") {
    const AnnulusFields f = annulus_fields(10.0);
    const auto v = [&](Point2 p) { return f.v(p); };
    const auto w = [&](Point2 p) { return f.w(p); };
    for (double rho : {1.3, 1.7, 3.0, 6.0, 9.5}) {
        for (double t : {0.1, 1.0, 2.5}) {
            CHECK(std::abs(laplacian(v, polar(rho, t), 1e-3)) <= 1e-4);
            CHECK(std::abs(laplacian(w, polar(rho, t), 1e-3)) <= 1e-4);
        }
    }
    const double t = 0.4, h = 1e-6;
    const auto radial = [&](double rho) { return f.w(polar(rho, t)); };
    CHECK(radial(2.0 - 1e-12) == doctest::Approx(radial(2.0 + 1e-12)).epsilon(1e-10));
    const double inner_flux = 2.0 * (radial(2.0) - radial(2.0 - h)) / h;
    const double outer_flux = 3.0 * (radial(2.0 + h) - radial(2.0)) / h;
    CHECK(inner_flux == doctest::Approx(outer_flux).epsilon(1e-5));
    CHECK(std::abs((radial(1.0 + h) - radial(1.0)) / h) <= 1e-4);
    // Analytic gradients agree with differences.
    const Point2 p = polar(4.0, 0.7);
    const Point2 g = f.grad_v(p);
    CHECK(g.x == doctest::Approx((f.v({p.x + h, p.y}) - f.v({p.x - h, p.y})) / (2 * h)).epsilon(1e-7));
    CHECK(g.y == doctest::Approx((f.v({p.x, p.y + h}) - f.v({p.x, p.y - h})) / (2 * h)).epsilon(1e-7));
}

TEST_CASE("annulus fields: gradient bounds and argument checks") {
    CHECK(annulus_fields(10.0).gradient_bounds_hold());
    CHECK_THROWS_AS(annulus_fields(1.0), InvalidArgument);
    CHECK_FALSE(annulus_fields(5.0).warnings.empty());
}

TEST_CASE("polar integral matches closed-form gradient energies") {
    const AnnulusFields f = annulus_fields(10.0);
    const auto gv2 = [&](double rho, double th) {
        const Point2 g = f.grad_v(polar(rho, th));
        return g.x * g.x + g.y * g.y;
    };
    const double k = f.v_coefficient();
    CHECK(polar_integral(gv2, 2.0, 10.0) == doctest::Approx(radial_energy(k, -k, 2.0, 10.0)).epsilon(1e-10));
    CHECK(polar_integral(gv2, 1.0, 2.0) == doctest::Approx(radial_energy(k, -k, 1.0, 2.0)).epsilon(1e-10));
    CHECK(polar_integral([](double, double) { return 1.0; }, 1.0, 3.0) == doctest::Approx(8.0 * kPi).epsilon(1e-12));
}

TEST_CASE("counterexample sequences") {
    const CounterexampleModel m = build_counterexample(11.0, 1.0, 6);
    CHECK(m.lambda_pp(1) == 1.0);
    CHECK(m.lambda_p(1) == doctest::Approx(0.05326).epsilon(1e-4));
    CHECK(m.lambda_p(1) == doctest::Approx(1.0 / ((1.0 + std::sqrt(0.5)) * 11.0)).epsilon(1e-14));
    const double c_squared = 3.0 + 2.0 * std::sqrt(2.0);
    for (int n = 1; n < m.cycles(); ++n)
        CHECK(m.lambda_pp(n + 1) / m.lambda_pp(n) == doctest::Approx(1.0 / (c_squared * 121.0)).epsilon(1e-13));
    CHECK_THROWS_AS(build_counterexample(10.0, 1.0), InvalidArgument);
}

TEST_CASE("counterexample density: plateaus and construction checks") {
    const CounterexampleModel m = build_counterexample(20.0, 1.0, 6);
    for (int n = 1; n <= m.cycles(); ++n) {
        for (double s : {1.0, 2.0, 7.5, 20.0}) {
            const double e1 = s * m.lambda_p(n), e2 = s * m.lambda_pp(n);
            CHECK(m.psi(e1) / (e1 * e1) == doctest::Approx(2.0).epsilon(1e-12));
            CHECK(m.psi(e2) / (e2 * e2) == doctest::Approx(3.0).epsilon(1e-12));
        }
    }
    const CounterexampleChecks c = counterexample_checks(m);
    CHECK(c.ok(1e-12));
    // Continuity and convexity, probed without the library's own check.
    for (double b : m.breakpoints()) {
        if (b <= 0.0) continue;
        const double h = 1e-9 * b;
        CHECK(m.psi(b - h) == doctest::Approx(m.psi(b + h)).epsilon(1e-7));
        CHECK(m.psi_slope_right(b) >= m.psi_slope_left(b) * (1.0 - 1e-12));
    }
}

TEST_CASE("counterexample energies against hand-computed integrals") {
    const CounterexampleModel m = build_counterexample(20.0, 1.0, 6);
    const double r = 10.0;
    const double k = (7.0 * r * r + 12.0) / (r * r - 1.0);
    const double ell1 = 2.0 * radial_energy(k, -k, 2.0, r) + 3.0 * radial_energy(k, -k, 1.0, 2.0);
    const double ell2 = 3.0 * radial_energy(7.0, 12.0, 2.0, r) + 2.0 * radial_energy(8.0, 8.0, 1.0, 2.0);
    const CounterexampleEnergies e = counterexample_energies(r, m);
    CHECK(e.ell1 == doctest::Approx(ell1).epsilon(1e-10));
    CHECK(e.ell2 == doctest::Approx(ell2).epsilon(1e-10));
    CHECK(e.ell1 == doctest::Approx(33105.07).epsilon(1e-6));
    CHECK(e.ell2 == doctest::Approx(46167.84).epsilon(1e-6));
    CHECK(e.separated);
    CHECK(e.margin == doctest::Approx(ell2 - ell1));
    for (double h : e.h_lambda_pp) CHECK(h == doctest::Approx(e.ell2).epsilon(1e-9));
    // Psi <= 3 E^2, so G(v) stays below ell1, and with it below ell2.
    for (double g : e.g_lambda_p) {
        CHECK(g <= e.ell1 * (1.0 + 1e-9));
        CHECK(g >= 2.0 * (e.v_outer + e.v_inner) * (1.0 - 1e-9));
        CHECK(g == doctest::Approx(e.g_lambda_p.front()).epsilon(1e-6));
    }
}

TEST_CASE("counterexample energies: margins grow and the gradient ratio tends to 1") {
    const CounterexampleModel m = build_counterexample(20.0, 1.0, 6);
    double prev_margin = 0.0;
    for (double r : {10.0, 20.0, 40.0}) {
        const CounterexampleEnergies e = counterexample_energies(r, m);
        CAPTURE(r);
        CHECK(e.ell1 < e.ell2);
        CHECK(e.margin > prev_margin);
        prev_margin = e.margin;
    }
    double prev_gap = 1.0;
    for (double r : {10.0, 100.0, 1000.0}) {
        const double q = gradient_energy_ratio(r);
        CHECK(std::abs(q - 1.0) < prev_gap);
        prev_gap = std::abs(q - 1.0);
    }
    CHECK(prev_gap < 0.01);
}

TEST_CASE("FEM annulus against the closed form") {
    const std::vector<int> levels{1, 2, 3};
    const auto rows = annulus_pec_validation(10.0, levels);
    REQUIRE(rows.size() == 3);
    for (std::size_t k = 1; k < rows.size(); ++k) {
        CHECK(rows[k].rel_l2_error < rows[k - 1].rel_l2_error);
        CHECK(rows[k].nodes > rows[k - 1].nodes);
        CHECK(rows[k].order > 1.5);
        CHECK(rows[k].max_principle_ok);
    }
    // The nodal error omits the interpolation error and superconverges.
    for (const auto& row : rows) CHECK(row.rel_l2_error > row.nodal_rel_l2_error);
    const std::vector<int> bad{2, 2};
    CHECK_THROWS_AS(annulus_pec_validation(10.0, bad), InvalidArgument);
}
