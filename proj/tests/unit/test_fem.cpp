#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "qlert/error.hpp"
#include "qlert/fem.hpp"
#include "qlert/mesh_generate.hpp"
#include "qlert/solver.hpp"
#include "qlert/sparse.hpp"
#include "test_support.hpp"

using namespace qlert;

namespace {

std::vector<double> solve_system(const StiffnessSystem& sys, double tol = 1e-13) {
    std::vector<double> x(sys.rhs.size(), 0.0);
    CgOptions opt;
    opt.tol = tol;
    solve_cg(sys.matrix, sys.rhs, x, opt);
    return x;
}

std::vector<Point2> cable_centers() { return {{-4.2e-4, 0.0}, {-2.1e-4, 0.0}, {0.0, 0.0}, {2.1e-4, 0.0}, {4.2e-4, 0.0}}; }

CsrMatrix tridiagonal(std::size_t n) {
    std::vector<int> r, c;
    std::vector<double> v;
    for (std::size_t i = 0; i < n; ++i) {
        const int ii = static_cast<int>(i);
        r.push_back(ii), c.push_back(ii), v.push_back(2.0);
        if (i + 1 < n) {
            r.push_back(ii), c.push_back(ii + 1), v.push_back(-1.0);
            r.push_back(ii + 1), c.push_back(ii), v.push_back(-1.0);
        }
    }
    return CsrMatrix::from_triplets(n, r, c, v);
}

}  // namespace

TEST_CASE("local stiffness of the reference triangle") {
    const Mesh m({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}, {0});
    const Assembler a(m, {0, 1, 2});
    const auto k = a.local_stiffness(0);
    const double expected[3][3] = {{1.0, -0.5, -0.5}, {-0.5, 0.5, 0.0}, {-0.5, 0.0, 0.5}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(k[i][j] == doctest::Approx(expected[i][j]).epsilon(1e-14));
}

TEST_CASE("patch test: linear fields are reproduced exactly (property)") {
    const Mesh mesh = generate_disk(1.0, 3);
    const DirichletBc probe = boundary_dirichlet(mesh, [](Point2) { return 0.0; });
    const Assembler assembler(mesh, probe.nodes);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coef(-3.0, 3.0), logsig(-4.0, 4.0);
    for (int trial = 0; trial < 6; ++trial) {
        const double a = coef(rng), b = coef(rng), c = coef(rng);
        const auto f = [&](Point2 p) { return a * p.x + b * p.y + c; };
        const DirichletBc bc = boundary_dirichlet(mesh, f);
        const std::vector<double> sigma(mesh.element_count(), std::pow(10.0, logsig(rng)));
        const auto sys = assembler.assemble(sigma, bc.values);
        const auto u = assembler.expand(solve_system(sys), bc.values);
        double err = 0.0;
        for (std::size_t i = 0; i < mesh.node_count(); ++i)
            err = std::max(err, std::abs(u[i] - f(mesh.node(static_cast<int>(i)))));
        CAPTURE(trial);
        CHECK(err <= 1e-9);
    }
}

TEST_CASE("element gradients are exact for linear fields") {
    const Mesh mesh = generate_petal_cable(6e-4, cable_centers(), 9.6e-5, 1);
    std::vector<double> u(mesh.node_count());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const Point2 p = mesh.node(static_cast<int>(i));
        u[i] = 3.0 * p.x - 2.0 * p.y + 1.0;
    }
    for (const Point2 g : element_gradients(mesh, u)) {
        CHECK(g.x == doctest::Approx(3.0).epsilon(1e-9));
        CHECK(g.y == doctest::Approx(-2.0).epsilon(1e-9));
    }
    u[static_cast<std::size_t>(mesh.element(0)[1])] = std::nan("");
    CHECK(std::isnan(element_gradients(mesh, u)[0].x));
}

TEST_CASE("assembled matrix is symmetric with positive diagonal") {
    const Mesh mesh = generate_petal_cable(6e-4, cable_centers(), 9.6e-5, 1);
    const DirichletBc bc = boundary_dirichlet(mesh, [](Point2 p) { return p.x; });
    const Assembler assembler(mesh, bc.nodes);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> logsig(0.0, 12.0);
    std::vector<double> sigma(mesh.element_count());
    for (auto& s : sigma) s = std::pow(10.0, logsig(rng));
    const auto sys = assembler.assemble(sigma, bc.values);
    const CsrMatrix& a = sys.matrix;
    for (std::size_t i = 0; i < a.rows; ++i) {
        CHECK(a.at(i, i) > 0.0);
        for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
            const auto j = static_cast<std::size_t>(a.col[k]);
            CHECK(a.val[k] == a.at(j, i));
        }
    }
}

TEST_CASE("row-sum matvec agrees with the plain product") {
    const Mesh mesh = generate_petal_cable(6e-4, cable_centers(), 9.6e-5, 1);
    const DirichletBc bc = boundary_dirichlet(mesh, [](Point2 p) { return p.x; });
    const Assembler assembler(mesh, bc.nodes);
    std::vector<double> sigma(mesh.element_count(), 5.55e7);
    for (std::size_t e = 0; e < sigma.size(); ++e)
        if (mesh.region(e) > 0) sigma[e] = 8e9;
    const auto sys = assembler.assemble(sigma, bc.values);
    REQUIRE_FALSE(sys.matrix.row_sum.empty());
    CsrMatrix plain = sys.matrix;
    plain.row_sum.clear();
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    std::vector<double> x(sys.matrix.rows), y1(x.size()), y2(x.size());
    for (auto& v : x) v = g(rng);
    sys.matrix.multiply(x, y1);
    plain.multiply(x, y2);
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        diff = std::max(diff, std::abs(y1[i] - y2[i]));
        scale = std::max(scale, std::abs(y2[i]));
    }
    CHECK(diff <= 1e-12 * scale);
}

TEST_CASE("PEC core floats at zero for odd data and balances its current") {
    const Mesh mesh = generate_annulus(1.0, 10.0, 2, AnnulusCore::filled);
    const DirichletBc bc = boundary_dirichlet(mesh, [](Point2 p) { return p.x; }, {0});
    const Assembler assembler(mesh, bc.nodes, LimitTreatment{{1}, {}});
    const DofMap& dofs = assembler.dof_map();
    REQUIRE(dofs.pec_masters.size() == 1);
    const std::vector<double> sigma(mesh.element_count(), 1.0);
    const auto sys = assembler.assemble(sigma, bc.values);
    const auto u = assembler.expand(solve_system(sys), bc.values);

    std::set<int> core_nodes;
    for (int e : mesh.elements_in_region(1))
        for (int v : mesh.element(static_cast<std::size_t>(e))) core_nodes.insert(v);
    const double v0 = u[static_cast<std::size_t>(*core_nodes.begin())];
    CHECK(std::abs(v0) <= 1e-10);
    for (int v : core_nodes) {
        CHECK(dofs.master[static_cast<std::size_t>(v)] == dofs.pec_masters[0]);
        CHECK(u[static_cast<std::size_t>(v)] == v0);
    }

    const auto currents = assembler.nodal_currents(sigma, u);
    double net = 0.0, scale = 0.0;
    for (int v : core_nodes) {
        net += currents[static_cast<std::size_t>(v)];
        scale += std::abs(currents[static_cast<std::size_t>(v)]);
    }
    CHECK(std::abs(net) <= 1e-9 * std::max(scale, 1.0));
    for (std::size_t i = 0; i < mesh.node_count(); ++i)
        if (dofs.kind[i] == DofKind::free && !core_nodes.count(static_cast<int>(i))) CHECK(std::abs(currents[i]) <= 1e-8);
}

TEST_CASE("PEC region on the Dirichlet boundary is a conflict") {
    const Mesh disk = generate_disk(1.0, 2);
    const Mesh all_inclusion = disk.relabeled(ElementMask(disk.element_count(), 1), 1);
    const DirichletBc bc = boundary_dirichlet(all_inclusion, [](Point2) { return 0.0; });
    CHECK_THROWS_AS(Assembler(all_inclusion, bc.nodes, LimitTreatment{{1}, {}}), ConflictError);
    CHECK_THROWS_AS(Assembler(disk, bc.nodes, LimitTreatment{{1}, {1}}), InvalidArgument);
    CHECK_THROWS_AS(Assembler(disk, {}), InvalidArgument);
}

TEST_CASE("component without Dirichlet nodes is singular") {
    const Mesh two({{0, 0}, {1, 0}, {0, 1}, {5, 0}, {6, 0}, {5, 1}}, {{0, 1, 2}, {3, 4, 5}}, {0, 0});
    CHECK_THROWS_AS(Assembler(two, {0, 1, 2}), SingularSystem);
}

TEST_CASE("region unknown groups are disjoint") {
    const Mesh mesh = generate_petal_cable(6e-4, cable_centers(), 9.6e-5, 1);
    const DirichletBc bc = boundary_dirichlet(mesh, [](Point2 p) { return p.x; });
    const Assembler assembler(mesh, bc.nodes);
    const auto groups = assembler.region_unknown_groups({1, 2, 3, 4, 5});
    REQUIRE(groups.size() == 5);
    std::set<int> seen;
    for (const auto& g : groups) {
        CHECK_FALSE(g.empty());
        for (int i : g) CHECK(seen.insert(i).second);
    }
}

TEST_CASE("conjugate gradients: small systems") {
    const CsrMatrix eye = CsrMatrix::from_triplets(3, std::vector<int>{0, 1, 2}, std::vector<int>{0, 1, 2},
                                                   std::vector<double>{1.0, 1.0, 1.0});
    std::vector<double> b{1.0, -2.0, 3.0}, x(3, 0.0);
    const CgResult r = solve_cg(eye, b, x);
    CHECK(r.iterations <= 1);
    CHECK(x == b);

    const CsrMatrix a = CsrMatrix::from_triplets(2, std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 1, 0, 1},
                                                 std::vector<double>{2.0, 1.0, 1.0, 2.0});
    std::vector<double> y(2, 0.0);
    solve_cg(a, std::vector<double>{1.0, 1.0}, y);
    CHECK(y[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(y[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    std::vector<double> z(2, 0.0);
    CgOptions one;
    one.max_iter = 1;
    CHECK_THROWS_AS(solve_cg(a, std::vector<double>{1.0, 0.0}, z, one), NonConvergence);
    try {
        std::vector<double> w(2, 0.0);
        solve_cg(a, std::vector<double>{1.0, 0.0}, w, one);
    } catch (const NonConvergence& e) {
        CHECK_FALSE(e.history().empty());
    }
    CHECK_THROWS_AS(solve_cg(a, std::vector<double>{1.0}, z), InvalidArgument);
}

TEST_CASE("conjugate gradients: functional decreases (property)") {
    const std::size_t n = 60;
    const CsrMatrix a = tridiagonal(n);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> b(n), x(n, 0.0), ax(n);
        for (auto& v : b) v = g(rng);
        const CgResult r = solve_cg(a, b, x);
        for (std::size_t k = 1; k < r.functional_history.size(); ++k)
            CHECK(r.functional_history[k] <= r.functional_history[k - 1] + 1e-12 * std::abs(r.functional_history[0]));
        a.multiply(x, ax);
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::abs(ax[i] - b[i]));
        CHECK(res <= 1e-8 * test::max_abs(b));
    }
}

TEST_CASE("dirichlet energy") {
    const Mesh mesh = generate_disk(1.0, 4);
    const MaterialMap lin{{0, MaterialModel::linear(1.0)}};
    const MaterialMap lin2{{0, MaterialModel::linear(2.0)}};
    std::vector<double> c(mesh.node_count(), 4.2), ux(mesh.node_count());
    for (std::size_t i = 0; i < ux.size(); ++i) ux[i] = mesh.node(static_cast<int>(i)).x;
    CHECK(dirichlet_energy(mesh, lin, c) == 0.0);
    // Q(E) = sigma E^2 / 2, so u = x gives half the polygon area.
    CHECK(dirichlet_energy(mesh, lin, ux) == doctest::Approx(0.5 * mesh.total_area()).epsilon(1e-12));
    CHECK(mesh.total_area() == doctest::Approx(std::numbers::pi).epsilon(0.01));
    CHECK(dirichlet_energy(mesh, lin2, ux) == doctest::Approx(2.0 * dirichlet_energy(mesh, lin, ux)));
}

TEST_CASE("L2 norms") {
    const Mesh mesh = generate_disk(2.0, 3);
    std::vector<double> one(mesh.node_count(), 1.0), zero(mesh.node_count(), 0.0);
    CHECK(l2_norm_squared(mesh, one) == doctest::Approx(mesh.total_area()));
    CHECK(l2_distance_squared(mesh, one, zero) == doctest::Approx(mesh.total_area()));
    CHECK_THROWS_AS(l2_norm_squared(mesh, std::vector<double>(3, 0.0)), InvalidArgument);
}
