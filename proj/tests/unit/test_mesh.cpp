#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "qlert/electrodes.hpp"
#include "qlert/error.hpp"
#include "qlert/mesh.hpp"
#include "qlert/mesh_generate.hpp"
#include "qlert/mesh_io.hpp"
#include "test_support.hpp"

using namespace qlert;

namespace {

constexpr double kPi = std::numbers::pi;

// Edges that belong to exactly one element, computed independently of Mesh.
std::set<std::pair<int, int>> topological_boundary(const Mesh& m) {
    std::map<std::pair<int, int>, int> count;
    for (const auto& t : m.elements()) {
        for (int k = 0; k < 3; ++k) {
            int a = t[static_cast<std::size_t>(k)], b = t[static_cast<std::size_t>((k + 1) % 3)];
            ++count[{std::min(a, b), std::max(a, b)}];
        }
    }
    std::set<std::pair<int, int>> out;
    for (const auto& [e, c] : count) {
        if (c == 1) out.insert(e);
    }
    return out;
}

void check_mesh_invariants(const Mesh& m) {
    for (std::size_t e = 0; e < m.element_count(); ++e) {
        const auto& t = m.element(e);
        for (int v : t) REQUIRE((v >= 0 && static_cast<std::size_t>(v) < m.node_count()));
        REQUIRE(orient2d(m.node(t[0]), m.node(t[1]), m.node(t[2])) > 0.0);
    }
    const auto topo = topological_boundary(m);
    std::set<std::pair<int, int>> tagged;
    for (const auto& b : m.boundary_edges()) tagged.insert({std::min(b.a, b.b), std::max(b.a, b.b)});
    CHECK(tagged.size() == m.boundary_edges().size());
    CHECK(tagged == topo);

    double sum = 0.0;
    for (const auto& [label, info] : m.region_table()) sum += m.region_area(label);
    CHECK(sum == doctest::Approx(m.total_area()).epsilon(1e-12));
    for (std::size_t e = 0; e < m.element_count(); ++e) CHECK(m.region_table().contains(m.region(e)));
}

std::vector<Point2> ring(int count, double radius, double phase = 0.0) {
    std::vector<Point2> out;
    for (int k = 0; k < count; ++k) {
        const double a = phase + 2.0 * kPi * k / count;
        out.push_back({radius * std::cos(a), radius * std::sin(a)});
    }
    return out;
}

std::map<int, int> edges_per_electrode(const Mesh& m) {
    std::map<int, int> out;
    for (const auto& b : m.boundary_edges()) {
        if (b.electrode != kNoElectrode) ++out[b.electrode];
    }
    return out;
}

}  // namespace

TEST_CASE("disk: orientation, area and refinement") {
    const Mesh m1 = generate_disk(1.0, 1);
    CHECK(m1.element_count() >= 8);
    check_mesh_invariants(m1);

    const double r = 0.6e-3;
    const Mesh m4 = generate_disk(r, 4);
    CHECK(m4.total_area() == doctest::Approx(kPi * r * r).epsilon(5e-3));

    for (int k = 1; k < 5; ++k)
        CHECK(generate_disk(1.0, k + 1).max_element_diameter() < generate_disk(1.0, k).max_element_diameter());

    CHECK_THROWS_AS(generate_disk(1.0, 0), InvalidArgument);
    CHECK_THROWS_AS(generate_disk(-1.0, 2), InvalidArgument);
}

TEST_CASE("disk: area gap shrinks at least 3x per refinement") {
    double prev = 0.0;
    for (int k = 1; k <= 5; ++k) {
        const double gap = kPi - generate_disk(1.0, k).total_area();
        CHECK(gap > 0.0);
        if (k > 1) CHECK(prev / gap >= 3.0);
        prev = gap;
    }
}

TEST_CASE("disk: boundary nodes lie on the circle") {
    const Mesh m = generate_disk(2.0, 3);
    for (int v : m.loop_nodes(0)) CHECK(norm(m.node(v)) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("annulus: area, radii and loops") {
    const Mesh m = generate_annulus(1.0, 10.0, 3);
    check_mesh_invariants(m);
    CHECK(m.total_area() == doctest::Approx(kPi * 99.0).epsilon(1e-2));
    const double h = m.max_element_diameter();
    for (const auto& p : m.nodes()) {
        CHECK(norm(p) >= 1.0 - h);
        CHECK(norm(p) <= 10.0 + h);
    }

    const Mesh small = generate_annulus(1.0, 2.0, 2);
    REQUIRE(small.loop_count() == 2);
    // Inner loop: a single closed chain of edges.
    const auto& edges = small.loop_edges(1);
    const auto& b = small.boundary_edges();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto& cur = b[static_cast<std::size_t>(edges[i])];
        const auto& next = b[static_cast<std::size_t>(edges[(i + 1) % edges.size()])];
        CHECK(cur.b == next.a);
        CHECK(norm(small.node(cur.a)) == doctest::Approx(1.0));
    }

    CHECK_THROWS_AS(generate_annulus(2.0, 1.0, 2), InvalidArgument);
    CHECK_THROWS_AS(generate_annulus(1.0, 1.0, 2), InvalidArgument);
    CHECK_THROWS_AS(generate_annulus(1.0, 2.0, 0), InvalidArgument);
}

TEST_CASE("annulus: area gap shrinks at least 3x per refinement") {
    double prev = 0.0;
    for (int k = 1; k <= 4; ++k) {
        const double gap = std::abs(kPi * 99.0 - generate_annulus(1.0, 10.0, k).total_area());
        if (k > 1) CHECK(prev / gap >= 3.0);
        prev = gap;
    }
}

TEST_CASE("annulus: filled core is inclusion 1") {
    const Mesh m = generate_annulus(1.0, 10.0, 2, AnnulusCore::filled);
    check_mesh_invariants(m);
    CHECK(m.loop_count() == 1);
    CHECK(m.region_area(1) == doctest::Approx(kPi).epsilon(2e-2));
    for (std::size_t e = 0; e < m.element_count(); ++e) {
        const double rho = norm(m.centroid(e));
        CHECK((m.region(e) == 1) == (rho < 1.0));
    }
}

TEST_CASE("cable: symmetric petals get similar element counts") {
    const double R = 0.6e-3;
    const auto centers = ring(6, 0.3e-3);
    const Mesh m = generate_petal_cable(R, centers, 0.08e-3, 2);
    check_mesh_invariants(m);
    std::vector<std::size_t> counts;
    for (int k = 1; k <= 6; ++k) counts.push_back(m.elements_in_region(k).size());
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    CHECK(*lo > 0);
    CHECK(static_cast<double>(*hi - *lo) <= 0.1 * static_cast<double>(*hi));
    for (int k = 1; k <= 6; ++k) CHECK(m.region_table().at(k).kind == RegionKind::inclusion);
}

TEST_CASE("cable: no petals is all matrix; one central petal has the right area") {
    const Mesh empty = generate_petal_cable(1.0, {}, 0.0, 2);
    for (int label : empty.element_region()) CHECK(label == kMatrixRegion);

    const std::vector<Point2> c{{0.0, 0.0}};
    const Mesh one = generate_petal_cable(1.0, c, 0.5, 3);
    check_mesh_invariants(one);
    CHECK(one.region_area(1) == doctest::Approx(kPi * 0.25).epsilon(2e-2));
}

TEST_CASE("cable: invalid geometry") {
    const std::vector<Point2> overlap{{0.0, 0.0}, {0.15, 0.0}};
    CHECK_THROWS_AS(generate_petal_cable(1.0, overlap, 0.1, 2), InvalidGeometry);
    const std::vector<Point2> touching{{0.95, 0.0}};
    CHECK_THROWS_AS(generate_petal_cable(1.0, touching, 0.1, 2), InvalidGeometry);
}

TEST_CASE("electrodes: sixteen ids, gaps untagged") {
    const Mesh m = tag_electrodes(generate_disk(0.6e-3, 3), ElectrodeLayout::uniform(16, 0.5));
    CHECK(m.electrode_count() == 16);
    const auto per = edges_per_electrode(m);
    CHECK(per.size() == 16);
    std::size_t gaps = 0;
    for (const auto& b : m.boundary_edges()) gaps += b.electrode == kNoElectrode;
    CHECK(gaps > 0);
}

TEST_CASE("electrodes: overlapping layouts are rejected") {
    CHECK_THROWS_AS(ElectrodeLayout::uniform(2, 1.0).validate(), InvalidArgument);
    CHECK_THROWS_AS(ElectrodeLayout::uniform(1, 0.5).validate(), InvalidArgument);
    CHECK_THROWS_AS(tag_electrodes(generate_disk(1.0, 2), ElectrodeLayout::uniform(2, 1.0)), InvalidArgument);
}

TEST_CASE("electrodes: equal edge counts on a symmetric disk") {
    const Mesh m = tag_electrodes(generate_disk(1.0, 3), ElectrodeLayout::uniform(4, 0.5, 0.1));
    const auto per = edges_per_electrode(m);
    REQUIRE(per.size() == 4);
    for (const auto& [id, n] : per) CHECK(n == per.begin()->second);
}

TEST_CASE("electrodes: rotating the layout by one pitch permutes ids cyclically") {
    const Mesh base = generate_disk(1.0, 3);
    const int n = 8;
    const double phase = 0.05;
    const Mesh a = tag_electrodes(base, ElectrodeLayout::uniform(n, 0.5, phase));
    const Mesh b = tag_electrodes(base, ElectrodeLayout::uniform(n, 0.5, phase + 2.0 * kPi / n));
    REQUIRE(a.boundary_edges().size() == b.boundary_edges().size());
    for (std::size_t i = 0; i < a.boundary_edges().size(); ++i) {
        const int ea = a.boundary_edges()[i].electrode, eb = b.boundary_edges()[i].electrode;
        if (ea == kNoElectrode) CHECK(eb == kNoElectrode);
        else CHECK(eb == (ea + n - 1) % n);
    }
}

TEST_CASE("mesh io: round trip") {
    const std::vector<Point2> c{{-0.2, 0.1}, {0.25, -0.1}};
    const Mesh m = tag_electrodes(generate_petal_cable(1.0, c, 0.12, 2), ElectrodeLayout::uniform(8, 0.4));
    std::stringstream s;
    write_mesh(s, m);
    const Mesh r = read_mesh(s);
    CHECK(r.nodes() == m.nodes());
    CHECK(r.elements() == m.elements());
    CHECK(r.element_region() == m.element_region());
    CHECK(r.boundary_edges() == m.boundary_edges());
    CHECK(mesh_fingerprint(r) == mesh_fingerprint(m));
}

TEST_CASE("mesh io: malformed input gives parse errors with line numbers") {
    std::istringstream empty("");
    CHECK_THROWS_AS(read_mesh(empty), ParseError);

    std::istringstream bad("qlmesh 1\nnodes 3\n0 0\n1 0\n0 1\nelements 1\n0 1 7 0\nboundary 0\n");
    try {
        read_mesh(bad);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 7);
    }

    std::istringstream header("qlmesh 2\n");
    CHECK_THROWS_AS(read_mesh(header), ParseError);
}

TEST_CASE("mesh io: truncated files never crash") {
    std::stringstream s;
    write_mesh(s, generate_disk(1.0, 1));
    const std::string text = s.str();
    std::mt19937_64 gen(7);
    std::uniform_int_distribution<std::size_t> cut(0, text.size() - 1);
    for (int trial = 0; trial < 200; ++trial) {
        std::istringstream in(text.substr(0, cut(gen)));
        try {
            read_mesh(in);
        } catch (const ParseError&) {
        } catch (const InvalidArgument&) {
        }
    }
}

TEST_CASE("mesh: fingerprint changes with labels") {
    const Mesh m = generate_disk(1.0, 2);
    ElementMask mask(m.element_count(), 0);
    mask[0] = 1;
    CHECK(mesh_fingerprint(m) != mesh_fingerprint(m.relabeled(mask, -1)));
    CHECK(mesh_fingerprint(m) == mesh_fingerprint(generate_disk(1.0, 2)));
}

TEST_CASE("mesh: constructor rejects bad elements") {
    const std::vector<Point2> nodes{{0, 0}, {1, 0}, {0, 1}};
    CHECK_THROWS_AS(Mesh(nodes, {{0, 2, 1}}, {0}), InvalidArgument);
    CHECK_THROWS_AS(Mesh(nodes, {{0, 1, 5}}, {0}), InvalidArgument);
    CHECK_NOTHROW(Mesh(nodes, {{0, 1, 2}}, {0}));
}
