#include "qlert/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qlert/error.hpp"
#include "qlert/fem.hpp"
#include "qlert/mesh_generate.hpp"
#include "qlert/solver.hpp"

namespace qlert {

namespace {

// u = (a + b / rho^2) x1 and its gradient.
double radial_dipole(double a, double b, Point2 x) {
    const double rho2 = x.x * x.x + x.y * x.y;
    return (a + b / rho2) * x.x;
}

Point2 radial_dipole_gradient(double a, double b, Point2 x) {
    const double rho2 = x.x * x.x + x.y * x.y;
    const double rho4 = rho2 * rho2;
    return {a + b / rho2 - 2.0 * b * x.x * x.x / rho4, -2.0 * b * x.x * x.y / rho4};
}

// Degree-4 symmetric rule on the reference triangle (6 points), barycentric
// coordinates and weights summing to 1.
struct TriQuadPoint {
    double l0, l1, l2, w;
};
constexpr TriQuadPoint kTriQuad[6] = {
    {0.108103018168070, 0.445948490915965, 0.445948490915965, 0.223381589678011},
    {0.445948490915965, 0.108103018168070, 0.445948490915965, 0.223381589678011},
    {0.445948490915965, 0.445948490915965, 0.108103018168070, 0.223381589678011},
    {0.816847572980459, 0.091576213509771, 0.091576213509771, 0.109951743655322},
    {0.091576213509771, 0.816847572980459, 0.091576213509771, 0.109951743655322},
    {0.091576213509771, 0.091576213509771, 0.816847572980459, 0.109951743655322},
};

double grad_norm_sq(const std::function<Point2(Point2)>& g, double rho, double theta) {
    const Point2 d = g({rho * std::cos(theta), rho * std::sin(theta)});
    return d.x * d.x + d.y * d.y;
}

}  // namespace

double AnnulusFields::v_coefficient() const { return (7.0 * r * r + 12.0) / (r * r - 1.0); }

double AnnulusFields::v(Point2 x) const {
    const double k = v_coefficient();
    return radial_dipole(k, -k, x);
}

Point2 AnnulusFields::grad_v(Point2 x) const {
    const double k = v_coefficient();
    return radial_dipole_gradient(k, -k, x);
}

double AnnulusFields::w(Point2 x) const {
    const double rho2 = x.x * x.x + x.y * x.y;
    return rho2 >= 4.0 ? radial_dipole(7.0, 12.0, x) : radial_dipole(8.0, 8.0, x);
}

Point2 AnnulusFields::grad_w(Point2 x) const {
    const double rho2 = x.x * x.x + x.y * x.y;
    return rho2 >= 4.0 ? radial_dipole_gradient(7.0, 12.0, x) : radial_dipole_gradient(8.0, 8.0, x);
}

bool AnnulusFields::gradient_bounds_hold(int radial_samples, int angular_samples) const {
    for (int i = 0; i <= radial_samples; ++i) {
        const double rho = 2.0 + (r - 2.0) * i / radial_samples;
        for (int j = 0; j < angular_samples; ++j) {
            const double th = 2.0 * std::numbers::pi * j / angular_samples;
            const double g = norm(grad_v({rho * std::cos(th), rho * std::sin(th)}));
            if (g < 1.0 || g > 10.0) return false;
        }
    }
    return true;
}

AnnulusFields annulus_fields(double r) {
    if (!(r > 1.0)) throw InvalidArgument("annulus_fields: outer radius must exceed 1");
    AnnulusFields f;
    f.r = r;
    f.gamma = 7.0 + 12.0 / (r * r);
    if (r < 10.0) {
        std::ostringstream msg;
        msg << "outer radius " << r << " is below 10; the gradient bounds of the construction may fail";
        f.warnings.push_back(msg.str());
    }
    return f;
}

double polar_integral(const std::function<double(double, double)>& f, double rho1, double rho2, double rel_tol) {
    if (!(rho1 > 0.0 && rho2 > rho1)) throw InvalidArgument("polar_integral: need 0 < rho1 < rho2");
    constexpr int kMaxLevel = 11;
    const double s0 = std::log(rho1), s1 = std::log(rho2);
    auto midpoint = [&](int n) {
        const double hs = (s1 - s0) / n, ht = 2.0 * std::numbers::pi / n;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            const double rho = std::exp(s0 + (i + 0.5) * hs);
            double ring = 0.0;
            for (int j = 0; j < n; ++j) ring += f(rho, (j + 0.5) * ht);
            sum += ring * rho * rho;
        }
        return sum * hs * ht;
    };
    // Romberg table on the midpoint rule (error expansion in even powers of h).
    std::vector<std::vector<double>> t;
    int n = 8;
    for (int level = 0; level <= kMaxLevel; ++level, n *= 2) {
        std::vector<double> row{midpoint(n)};
        for (int j = 1; j <= level; ++j) {
            const double f4 = std::pow(4.0, j);
            row.push_back(row[j - 1] + (row[j - 1] - t[level - 1][j - 1]) / (f4 - 1.0));
        }
        t.push_back(std::move(row));
        if (level >= 2) {
            const double now = t[level][level], before = t[level - 1][level - 1];
            if (std::abs(now - before) <= rel_tol * std::abs(now)) return now;
        }
    }
    std::vector<double> history;
    for (const auto& row : t) history.push_back(row.back());
    throw NonConvergence("polar_integral: quadrature did not reach the requested tolerance", history);
}

CounterexampleModel::CounterexampleModel(double big_l, double lambda_pp1, int cycles) : l_(big_l) {
    if (!(big_l > 1.0)) throw InvalidArgument("counterexample: L must exceed 1");
    if (!(lambda_pp1 > 0.0)) throw InvalidArgument("counterexample: lambda''_1 must be positive");
    if (cycles < 1) throw InvalidArgument("counterexample: need at least one cycle");
    double pp = lambda_pp1;
    for (int n = 0; n < cycles; ++n) {
        lambda_pp_.push_back(pp);
        const double p = pp / (kC2 * l_);
        lambda_p_.push_back(p);
        pp = p / (kC1 * l_);
    }
    lambda_pp_.push_back(pp);  // l''_{cycles+1}, bottom of the stored range

    // Ascending pieces of Psi = Phi + E^2.
    const auto big = static_cast<std::size_t>(cycles);
    pieces_.push_back({0.0, l_ * lambda_pp_[big], 3.0, 0.0, 0.0});
    for (std::size_t k = big; k-- > 0;) {
        const double t = l_ * lambda_pp_[k + 1];
        pieces_.push_back({t, lambda_p_[k], 1.0, 4.0 * t, -2.0 * t * t});
        pieces_.push_back({lambda_p_[k], l_ * lambda_p_[k], 2.0, 0.0, 0.0});
        const double s = lambda_pp_[k];
        pieces_.push_back({l_ * lambda_p_[k], s, 1.0, 4.0 * s, -2.0 * s * s});
        pieces_.push_back({s, l_ * s, 3.0, 0.0, 0.0});
    }
    pieces_.push_back({l_ * lambda_pp_[0], std::numeric_limits<double>::infinity(), 3.0, 0.0, 0.0});
}

const CounterexampleModel::Piece& CounterexampleModel::piece_at(double e, bool left) const {
    for (const auto& p : pieces_) {
        if (left ? (e > p.lo && e <= p.hi) : (e >= p.lo && e < p.hi)) return p;
    }
    return pieces_.front();
}

double CounterexampleModel::psi(double e) const {
    if (!(e >= 0.0)) throw InvalidArgument("psi: field must be nonnegative");
    const Piece& p = piece_at(e, false);
    return (p.a * e + p.b) * e + p.c;
}

double CounterexampleModel::psi_left(double e) const {
    if (!(e >= 0.0)) throw InvalidArgument("psi: field must be nonnegative");
    const Piece& p = piece_at(e, true);
    return (p.a * e + p.b) * e + p.c;
}

double CounterexampleModel::psi_slope_left(double e) const {
    const Piece& p = piece_at(e, true);
    return 2.0 * p.a * e + p.b;
}

double CounterexampleModel::psi_slope_right(double e) const {
    const Piece& p = piece_at(e, false);
    return 2.0 * p.a * e + p.b;
}

std::vector<double> CounterexampleModel::breakpoints() const {
    std::vector<double> b;
    for (std::size_t k = 1; k < pieces_.size(); ++k) b.push_back(pieces_[k].lo);
    return b;
}

CounterexampleModel build_counterexample(double big_l, double lambda_pp1, int cycles) {
    if (!(big_l > 10.0)) throw InvalidArgument("build_counterexample: L must exceed 10");
    return CounterexampleModel(big_l, lambda_pp1, cycles);
}

CounterexampleChecks counterexample_checks(const CounterexampleModel& m) {
    CounterexampleChecks c;
    const double l = m.big_l();
    auto rel = [](double got, double want) { return std::abs(got - want) / std::abs(want); };
    c.interleaved = true;
    for (int n = 1; n <= m.cycles(); ++n) {
        const double p = m.lambda_p(n), pp = m.lambda_pp(n), next = m.lambda_pp(n + 1);
        c.ratio_error = std::max(c.ratio_error, rel(p / pp, 1.0 / (CounterexampleModel::kC2 * l)));
        c.ratio_error = std::max(c.ratio_error, rel(next / p, 1.0 / (CounterexampleModel::kC1 * l)));
        if (!(l * next < p && p < l * p && l * p < pp && pp < l * pp)) c.interleaved = false;
    }
    const std::vector<double> b = m.breakpoints();
    if (!std::is_sorted(b.begin(), b.end()) || std::adjacent_find(b.begin(), b.end()) != b.end()) c.interleaved = false;
    c.min_slope_jump = std::numeric_limits<double>::infinity();
    for (double x : b) {
        if (!(x > 0.0) || !std::isfinite(x)) continue;
        c.continuity_error = std::max(c.continuity_error, std::abs(m.psi_left(x) - m.psi(x)) / m.psi(x));
        const double right = m.psi_slope_right(x);
        c.min_slope_jump = std::min(c.min_slope_jump, (right - m.psi_slope_left(x)) / right);
    }
    if (!std::isfinite(c.min_slope_jump)) c.min_slope_jump = 0.0;
    return c;
}

CounterexampleEnergies counterexample_energies(double r, const CounterexampleModel& model) {
    const AnnulusFields f = annulus_fields(r);
    auto gv = [&](Point2 x) { return f.grad_v(x); };
    auto gw = [&](Point2 x) { return f.grad_w(x); };
    auto sq = [](const std::function<Point2(Point2)>& g) {
        return [g](double rho, double th) { return grad_norm_sq(g, rho, th); };
    };

    CounterexampleEnergies out;
    out.r = r;
    out.v_outer = polar_integral(sq(gv), 2.0, r);
    out.v_inner = polar_integral(sq(gv), 1.0, 2.0);
    out.w_outer = polar_integral(sq(gw), 2.0, r);
    out.w_inner = polar_integral(sq(gw), 1.0, 2.0);
    out.ell1 = 2.0 * out.v_outer + 3.0 * out.v_inner;
    out.ell2 = 3.0 * out.w_outer + 2.0 * out.w_inner;
    out.margin = out.ell2 - out.ell1;
    out.separated = out.ell1 < out.ell2;

    // Psi has kinks inside D_2 \ D_1, so those integrals converge only at second order.
    constexpr double kKinkTol = 1e-7;
    for (int n = 1; n <= model.cycles(); ++n) {
        const double lp = model.lambda_p(n);
        auto gpsi = [&, lp](double rho, double th) {
            return model.psi(lp * std::sqrt(grad_norm_sq(gv, rho, th))) / (lp * lp);
        };
        out.lambda_p.push_back(lp);
        out.g_lambda_p.push_back(polar_integral(gpsi, 2.0, r) + polar_integral(gpsi, 1.0, 2.0, kKinkTol));

        const double lpp = model.lambda_pp(n);
        auto hpsi = [&, lpp](double rho, double th) {
            return model.psi(lpp * std::sqrt(grad_norm_sq(gw, rho, th))) / (lpp * lpp);
        };
        out.lambda_pp.push_back(lpp);
        out.h_lambda_pp.push_back(polar_integral(hpsi, 2.0, r) + 2.0 * out.w_inner);
    }
    return out;
}

double gradient_energy_ratio(double r) {
    const AnnulusFields f = annulus_fields(r);
    auto v = [&](double rho, double th) { return grad_norm_sq([&](Point2 x) { return f.grad_v(x); }, rho, th); };
    auto w = [&](double rho, double th) { return grad_norm_sq([&](Point2 x) { return f.grad_w(x); }, rho, th); };
    return polar_integral(v, 2.0, r) / polar_integral(w, 2.0, r);
}

std::vector<AnnulusLevel> annulus_pec_validation(double r, std::span<const int> refinements) {
    const AnnulusFields f = annulus_fields(r);
    for (std::size_t i = 1; i < refinements.size(); ++i) {
        if (refinements[i] <= refinements[i - 1])
            throw InvalidArgument("annulus_pec_validation: refinements must be increasing");
    }
    std::vector<AnnulusLevel> out;
    for (int k : refinements) {
        const Mesh mesh = generate_annulus(1.0, r, k, AnnulusCore::filled);
        const double gamma = f.gamma;
        const DirichletBc bc = boundary_dirichlet(mesh, [gamma](Point2 p) { return gamma * p.x; });
        const FieldSolution sol = solve_pec_limit(mesh, MaterialModel::linear(1.0), {1}, bc);

        std::vector<double> exact(mesh.node_count(), 0.0);
        for (std::size_t i = 0; i < exact.size(); ++i) {
            const Point2 p = mesh.node(i);
            if (norm(p) >= 1.0) exact[i] = f.v(p);
        }
        ElementMask annulus(mesh.element_count(), 0);
        for (std::size_t e = 0; e < annulus.size(); ++e) annulus[e] = mesh.region(e) == kMatrixRegion;

        // ||u_h - v|| with v evaluated at quadrature points, so the
        // interpolation error of the P1 space is included.
        double err2 = 0.0, ref2 = 0.0;
        for (std::size_t e = 0; e < mesh.element_count(); ++e) {
            if (!annulus[e]) continue;
            const Triangle& t = mesh.element(e);
            const Point2 a = mesh.node(t[0]), b = mesh.node(t[1]), c = mesh.node(t[2]);
            const double ua = sol.nodal_potential[static_cast<std::size_t>(t[0])];
            const double ub = sol.nodal_potential[static_cast<std::size_t>(t[1])];
            const double uc = sol.nodal_potential[static_cast<std::size_t>(t[2])];
            const double area = mesh.element_area(e);
            for (const TriQuadPoint& q : kTriQuad) {
                const Point2 x{q.l0 * a.x + q.l1 * b.x + q.l2 * c.x, q.l0 * a.y + q.l1 * b.y + q.l2 * c.y};
                const double ve = f.v(x);
                const double d = q.l0 * ua + q.l1 * ub + q.l2 * uc - ve;
                err2 += q.w * area * d * d;
                ref2 += q.w * area * ve * ve;
            }
        }

        AnnulusLevel level;
        level.refinement = k;
        level.nodes = mesh.node_count();
        level.rel_l2_error = std::sqrt(err2 / ref2);
        level.nodal_rel_l2_error = std::sqrt(l2_distance_squared(mesh, sol.nodal_potential, exact, annulus) /
                                             l2_norm_squared(mesh, exact, annulus));
        if (!out.empty() && level.rel_l2_error > 0.0)
            level.order = std::log2(out.back().rel_l2_error / level.rel_l2_error) / (k - out.back().refinement);
        level.linear_iterations = sol.linear_iterations;
        level.max_principle_ok = sol.max_principle_ok;
        out.push_back(level);
    }
    return out;
}

}  // namespace qlert
