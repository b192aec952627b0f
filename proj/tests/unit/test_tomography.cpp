#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "qlert/electrodes.hpp"
#include "qlert/error.hpp"
#include "qlert/mesh_generate.hpp"
#include "qlert/scenario.hpp"
#include "qlert/tomography.hpp"

using namespace qlert;

namespace {

Mesh ring_with_electrodes(int count) {
    return tag_electrodes(generate_annulus(0.5, 1.0, 2), ElectrodeLayout::uniform(count, 0.5));
}

Mesh cable_with_electrodes(int count, int refinement = 1) {
    const CableScenario s = CableScenario::reference(refinement);
    return tag_electrodes(s.mesh(), ElectrodeLayout::uniform(count, 0.5));
}

double deflated_min_eig(const DenseMatrix& m) { return jacobi_eigen(deflate_constant(m)).values.front(); }

}  // namespace

TEST_CASE("conductance matrix of a symmetric ring is circulant with zero row sums") {
    const Mesh mesh = ring_with_electrodes(4);
    ConductanceOptions opt;
    opt.model = ForwardModel::nonlinear;
    const ConductanceMatrix c = conductance_matrix(mesh, {{0, MaterialModel::linear(1.0)}}, opt);
    const DenseMatrix& g = c.g;
    REQUIRE(g.rows() == 4);
    const double scale = g.max_abs();
    CHECK(c.asymmetry <= 1e-8);
    for (std::size_t i = 0; i < 4; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
            row += g(i, j);
            CHECK(g(i, j) == doctest::Approx(g((i + 1) % 4, (j + 1) % 4)).scale(scale).epsilon(1e-8));
        }
        CHECK(std::abs(row) <= 1e-8 * scale);
        CHECK(g(i, i) > 0.0);
    }
    // Opposite electrodes mirror each other.
    CHECK(g(0, 1) == doctest::Approx(g(0, 3)).scale(scale).epsilon(1e-8));

    const ConductanceMatrix c3 = conductance_matrix(mesh, {{0, MaterialModel::linear(3.0)}}, opt);
    CHECK(max_abs_difference(c3.g, 3.0 * g) <= 1e-8 * 3.0 * scale);
    opt.amplitude = 7.0;
    CHECK(max_abs_difference(conductance_matrix(mesh, {{0, MaterialModel::linear(1.0)}}, opt).g, g) <= 1e-8 * scale);
}

TEST_CASE("conductance matrix is reciprocal and positive on zero-mean patterns") {
    const Mesh mesh = cable_with_electrodes(8);
    const CableScenario s = CableScenario::reference(1);
    ConductanceOptions opt;
    opt.amplitude = 1e-3;
    const ConductanceMatrix c = conductance_matrix(mesh, s.materials(mesh), opt);
    CHECK(c.asymmetry <= 1e-4);
    CHECK(c.picard_iterations > 0);
    CHECK(deflated_min_eig(c.g) > 0.0);
}

TEST_CASE("low-amplitude E-J data approach the PEC limit") {
    const Mesh mesh = cable_with_electrodes(8);
    const CableScenario s = CableScenario::reference(1);
    ConductanceOptions opt;
    opt.amplitude = 1e-6;
    const ConductanceMatrix nl = conductance_matrix(mesh, s.materials(mesh), opt);
    opt.model = ForwardModel::pec_limit;
    const ConductanceMatrix pec = conductance_matrix(mesh, s.materials(mesh), opt);
    CHECK((nl.g - pec.g).frobenius() <= 1e-2 * pec.g.frobenius());
}

TEST_CASE("is_psd") {
    CHECK(is_psd(DenseMatrix::identity(3), 0.0).psd);
    DenseMatrix d(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = -1.0;
    const PsdCheck p = is_psd(d, 1e-12);
    CHECK_FALSE(p.psd);
    CHECK(p.min_eigenvalue == doctest::Approx(-1.0));
    CHECK(is_psd(d, 1.0).psd);
    DenseMatrix a = DenseMatrix::identity(2);
    a(0, 1) = 0.5;
    CHECK_THROWS_AS(is_psd(a, 0.0), InvalidArgument);
    CHECK_THROWS_AS(is_psd(DenseMatrix(2, 3), 0.0), InvalidArgument);
}

TEST_CASE("deflation removes the constant direction") {
    const DenseMatrix ones(5, 5, 1.0);
    CHECK(deflate_constant(ones).max_abs() <= 1e-14);
    const DenseMatrix d = deflate_constant(DenseMatrix::identity(5));
    CHECK((d - DenseMatrix::identity(4)).max_abs() <= 1e-14);
}

TEST_CASE("GOE noise: scaling, determinism and variance") {
    CHECK(goe_noise(6, 0.0, 5.0, 1).max_abs() == 0.0);
    const DenseMatrix a = goe_noise(16, 0.01, 2.0, 42);
    CHECK(a == goe_noise(16, 0.01, 2.0, 42));
    CHECK_FALSE(a == goe_noise(16, 0.01, 2.0, 43));
    CHECK(a.asymmetry() == 0.0);

    const std::size_t n = 1000;
    const double s = 0.5 * 3.0;
    const DenseMatrix big = goe_noise(n, 0.5, 3.0, 7);
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        diag += big(i, i) * big(i, i);
        for (std::size_t j = i + 1; j < n; ++j) off += big(i, j) * big(i, j);
    }
    off /= n * (n - 1) / 2.0;
    diag /= n;
    CHECK(off == doctest::Approx(s * s).epsilon(0.02));
    CHECK(diag == doctest::Approx(2.0 * s * s).epsilon(0.15));
}

TEST_CASE("monotonicity test: acceptance rules (property)") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    const std::size_t n = 6, count = 12;
    DenseMatrix measured(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) measured(i, j) = measured(j, i) = g(rng);
    std::vector<DenseMatrix> tests;
    std::vector<ElementMask> masks;
    for (std::size_t k = 0; k < count; ++k) {
        DenseMatrix t(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) t(i, j) = t(j, i) = g(rng);
        tests.push_back(t);
        ElementMask m(count, 0);
        m[k] = 1;
        masks.push_back(m);
    }
    tests.push_back(measured);
    masks.push_back(ElementMask(count, 0));

    const Reconstruction none = mpm_reconstruct(measured, tests, masks, 0.0, 1e-12);
    CHECK(std::find(none.accepted.begin(), none.accepted.end(), static_cast<int>(count)) != none.accepted.end());
    const Reconstruction all = mpm_reconstruct(measured, tests, masks, 1e6, 1e-12);
    CHECK(all.accepted.size() == tests.size());

    std::size_t prev = 0;
    for (double delta : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0}) {
        const Reconstruction r = mpm_reconstruct(measured, tests, masks, delta, 1e-12);
        CHECK(r.accepted.size() >= prev);
        prev = r.accepted.size();
        for (std::size_t k = 0; k < tests.size(); ++k)
            CHECK(r.min_eigenvalue[k] == doctest::Approx(none.min_eigenvalue[k] + delta));
    }
    CHECK_THROWS_AS(mpm_reconstruct(DenseMatrix(3, 3), tests, masks, 0.0, 0.0), InvalidArgument);
    CHECK_THROWS_AS(mpm_reconstruct(measured, tests, std::vector<ElementMask>{}, 0.0, 0.0), InvalidArgument);
}

TEST_CASE("test domains stay in the matrix") {
    const Mesh mesh = cable_with_electrodes(8);
    const double radii[] = {6e-5, 1.2e-4};
    const auto domains = disc_test_domains(mesh, radii, 1.2e-4);
    REQUIRE_FALSE(domains.empty());
    for (const auto& d : domains) {
        CHECK(std::hypot(d.center.x, d.center.y) + d.radius <= 6e-4 * (1.0 + 1e-12));
        bool any = false;
        for (std::size_t e = 0; e < mesh.element_count(); ++e) {
            if (!d.mask[e]) continue;
            any = true;
            CHECK(mesh.region(e) == 0);
            const Point2 c = mesh.centroid(e);
            CHECK(std::hypot(c.x - d.center.x, c.y - d.center.y) <= d.radius);
        }
        CHECK(any);
    }
    const ElementMask m = disc_mask(mesh, {0.0, 3e-4}, 6e-5);
    const Mesh defected = with_defect(mesh, m, 2);
    for (std::size_t e = 0; e < mesh.element_count(); ++e)
        CHECK(defected.region(e) == (m[e] ? -2 : mesh.region(e)));
}

TEST_CASE("nested defects give ordered conductance matrices (property)") {
    const Mesh mesh = cable_with_electrodes(8);
    const CableScenario s = CableScenario::reference(1);
    ConductanceOptions opt;
    opt.model = ForwardModel::pec_limit;
    const std::vector<Point2> centers{{0.0, 3e-4}, {-2e-4, -3e-4}, {3e-4, 2e-4}};
    for (const Point2 c : centers) {
        std::vector<TestDomain> pair(2);
        pair[0].center = pair[1].center = c;
        pair[0].radius = 5e-5;
        pair[1].radius = 1.2e-4;
        pair[0].mask = disc_mask(mesh, c, pair[0].radius);
        pair[1].mask = disc_mask(mesh, c, pair[1].radius);
        const auto g = test_domain_matrices(mesh, pair, s.matrix_material(), s.defect_material(), opt);
        const double scale = g[0].g.max_abs();
        CAPTURE(c.x);
        CAPTURE(c.y);
        CHECK(deflated_min_eig(g[0].g - g[1].g) >= -1e-9 * scale);
    }
}

TEST_CASE("reconstruction metrics") {
    const Mesh mesh = cable_with_electrodes(8);
    const ElementMask truth = disc_mask(mesh, {0.0, 3e-4}, 6e-5);
    const ElementMask wide = disc_mask(mesh, {0.0, 3e-4}, 1.2e-4);
    const ReconstructionMetrics same = reconstruction_metrics(mesh, truth, truth);
    CHECK(same.upper_bound);
    CHECK(same.coverage == doctest::Approx(1.0));
    CHECK(same.excess == 0.0);
    const ReconstructionMetrics over = reconstruction_metrics(mesh, truth, wide);
    CHECK(over.upper_bound);
    CHECK(over.excess > 0.0);
    const ReconstructionMetrics empty = reconstruction_metrics(mesh, truth, ElementMask(mesh.element_count(), 0));
    CHECK_FALSE(empty.upper_bound);
    CHECK(empty.coverage == 0.0);
}

TEST_CASE("thread count does not change the conductance matrix") {
    const Mesh mesh = cable_with_electrodes(8);
    const CableScenario s = CableScenario::reference(1);
    ConductanceOptions opt;
    const DenseMatrix one = conductance_matrix(mesh, s.materials(mesh), opt).g;
    opt.threads = 3;
    CHECK(conductance_matrix(mesh, s.materials(mesh), opt).g == one);
}
