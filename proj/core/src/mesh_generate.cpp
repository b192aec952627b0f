#include "qlert/mesh_generate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "delaunay.hpp"
#include "qlert/error.hpp"

namespace qlert {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kMaxRefinement = 12;

void check_refinement(int refinement) {
    if (refinement <= 0) throw InvalidArgument("refinement must be a positive integer");
    if (refinement > kMaxRefinement)
        throw InvalidArgument("refinement " + std::to_string(refinement) + " exceeds the supported maximum");
}

struct Ring {
    std::vector<int> ids;
    std::vector<double> angles;  // ascending, first angle in [0, 2pi / n)
};

Ring make_ring(std::vector<Point2>& nodes, double radius, int count, double phase) {
    Ring r;
    for (int j = 0; j < count; ++j) {
        double a = phase + kTwoPi * j / count;
        r.ids.push_back(static_cast<int>(nodes.size()));
        r.angles.push_back(a);
        nodes.push_back({radius * std::cos(a), radius * std::sin(a)});
    }
    return r;
}

void push_ccw(std::vector<Triangle>& out, const std::vector<Point2>& nodes, int a, int b, int c) {
    if (orient2d(nodes[static_cast<std::size_t>(a)], nodes[static_cast<std::size_t>(b)],
                 nodes[static_cast<std::size_t>(c)]) < 0.0)
        std::swap(b, c);
    out.push_back({a, b, c});
}

// Triangulate the band between two concentric rings by merging their angles.
void stitch(const Ring& inner, const Ring& outer, const std::vector<Point2>& nodes, std::vector<Triangle>& out) {
    const auto n1 = inner.ids.size();
    const auto n2 = outer.ids.size();
    if (n1 == 1) {
        for (std::size_t j = 0; j < n2; ++j)
            push_ccw(out, nodes, inner.ids[0], outer.ids[j], outer.ids[(j + 1) % n2]);
        return;
    }
    auto angle_in = [&](std::size_t i) { return i < n1 ? inner.angles[i] : inner.angles[i - n1] + kTwoPi; };
    auto angle_out = [&](std::size_t j) { return j < n2 ? outer.angles[j] : outer.angles[j - n2] + kTwoPi; };
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < n1 || j < n2) {
        if (j == n2 || (i < n1 && angle_in(i + 1) < angle_out(j + 1))) {
            push_ccw(out, nodes, inner.ids[i % n1], outer.ids[j % n2], inner.ids[(i + 1) % n1]);
            ++i;
        } else {
            push_ccw(out, nodes, inner.ids[i % n1], outer.ids[j % n2], outer.ids[(j + 1) % n2]);
            ++j;
        }
    }
}

// Uniform bucket grid for neighbour queries during point filtering.
class PointGrid {
public:
    PointGrid(double extent, double cell) : cell_(cell), offset_(extent) {}

    void insert(Point2 p, int id) { cells_[key(p)].push_back(id); }

    template <class F>
    void for_each_near(Point2 p, F&& f) const {
        const auto cx = coord(p.x);
        const auto cy = coord(p.y);
        for (long dx = -1; dx <= 1; ++dx) {
            for (long dy = -1; dy <= 1; ++dy) {
                auto it = cells_.find(pack(cx + dx, cy + dy));
                if (it == cells_.end()) continue;
                for (int id : it->second) f(id);
            }
        }
    }

private:
    long coord(double v) const { return static_cast<long>(std::floor((v + offset_) / cell_)); }
    static std::uint64_t pack(long x, long y) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) |
               static_cast<std::uint32_t>(y);
    }
    std::uint64_t key(Point2 p) const { return pack(coord(p.x), coord(p.y)); }

    double cell_;
    double offset_;
    std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

struct CableLayout {
    double h = 0.0;        // background spacing
    double s = 0.0;        // petal boundary spacing
    int m = 0;             // petal polygon vertices
    int m_out = 0;         // outer boundary vertices
};

CableLayout cable_layout(double R, std::span<const Point2> centers, double rp, int refinement) {
    check_refinement(refinement);
    if (!(R > 0.0)) throw InvalidArgument("outer radius must be positive");
    if (!centers.empty() && !(rp > 0.0)) throw InvalidArgument("petal radius must be positive");

    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < centers.size(); ++k) {
        double to_boundary = R - norm(centers[k]) - rp;
        if (!(to_boundary > 0.0))
            throw InvalidGeometry("petal " + std::to_string(k + 1) + " touches or crosses the outer boundary");
        gap = std::min(gap, to_boundary);
        for (std::size_t l = k + 1; l < centers.size(); ++l) {
            double between = distance(centers[k], centers[l]) - 2.0 * rp;
            if (!(between > 0.0))
                throw InvalidGeometry("petals " + std::to_string(k + 1) + " and " + std::to_string(l + 1) +
                                      " overlap or touch");
            gap = std::min(gap, between);
        }
    }

    CableLayout lay;
    lay.h = R / (5.0 * std::pow(2.0, refinement - 1));
    if (!centers.empty()) {
        double s = std::min({lay.h, kTwoPi * rp / 12.0, gap / 2.2});
        lay.m = std::max(12, static_cast<int>(std::ceil(kTwoPi * rp / s - 1e-9)));
        lay.s = kTwoPi * rp / lay.m;
    }
    int m_out = static_cast<int>(std::ceil(kTwoPi * R / lay.h - 1e-9));
    lay.m_out = std::max(16, (m_out + 15) / 16 * 16);
    return lay;
}

}  // namespace

Mesh generate_disk(double radius, int refinement) {
    if (!(radius > 0.0)) throw InvalidArgument("disk radius must be positive");
    check_refinement(refinement);
    const int rings = 1 << refinement;

    std::vector<Point2> nodes{{0.0, 0.0}};
    std::vector<Triangle> elements;
    Ring previous{{0}, {0.0}};
    for (int i = 1; i <= rings; ++i) {
        Ring ring = make_ring(nodes, radius * i / rings, 6 * i, 0.0);
        stitch(previous, ring, nodes, elements);
        previous = std::move(ring);
    }
    std::vector<int> regions(elements.size(), kMatrixRegion);
    return Mesh(std::move(nodes), std::move(elements), std::move(regions));
}

Mesh generate_annulus(double r_inner, double r_outer, int refinement, AnnulusCore core) {
    if (!(r_inner > 0.0)) throw InvalidArgument("annulus inner radius must be positive");
    if (!(r_inner < r_outer)) throw InvalidArgument("annulus requires r_inner < r_outer");
    check_refinement(refinement);

    const int sectors = 16 << (refinement - 1);
    const double log_ratio = std::log(r_outer / r_inner);
    const int radial_base = std::max(1, static_cast<int>(std::lround(16.0 * log_ratio / kTwoPi)));
    const int radial = radial_base << (refinement - 1);

    std::vector<Point2> nodes;
    std::vector<Triangle> elements;
    std::vector<int> regions;

    auto grid = [&](int i, int j) { return i * sectors + (j % sectors); };
    for (int i = 0; i <= radial; ++i) {
        double r = r_inner * std::exp(log_ratio * i / radial);
        if (i == radial) r = r_outer;
        for (int j = 0; j < sectors; ++j) {
            double a = kTwoPi * j / sectors;
            nodes.push_back({r * std::cos(a), r * std::sin(a)});
        }
    }
    for (int i = 0; i < radial; ++i) {
        double r_mid = r_inner * std::exp(log_ratio * (i + 0.5) / radial);
        for (int j = 0; j < sectors; ++j) {
            double a = kTwoPi * (j + 0.5) / sectors;
            int c = static_cast<int>(nodes.size());
            nodes.push_back({r_mid * std::cos(a), r_mid * std::sin(a)});
            std::array<int, 4> q{grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1)};
            for (int k = 0; k < 4; ++k) {
                push_ccw(elements, nodes, c, q[static_cast<std::size_t>(k)], q[static_cast<std::size_t>((k + 1) % 4)]);
                regions.push_back(kMatrixRegion);
            }
        }
    }

    if (core == AnnulusCore::filled) {
        Ring boundary;
        for (int j = 0; j < sectors; ++j) {
            boundary.ids.push_back(grid(0, j));
            boundary.angles.push_back(kTwoPi * j / sectors);
        }
        const int core_rings = std::max(1, static_cast<int>(std::lround(sectors / kTwoPi)));
        Ring previous{{static_cast<int>(nodes.size())}, {0.0}};
        nodes.push_back({0.0, 0.0});
        const std::size_t first_core = elements.size();
        for (int k = 1; k < core_rings; ++k) {
            int count = std::max(6, static_cast<int>(std::lround(static_cast<double>(sectors) * k / core_rings)));
            Ring ring = make_ring(nodes, r_inner * k / core_rings, count, 0.0);
            stitch(previous, ring, nodes, elements);
            previous = std::move(ring);
        }
        stitch(previous, boundary, nodes, elements);
        regions.resize(elements.size(), 1);
        for (std::size_t e = first_core; e < elements.size(); ++e) regions[e] = 1;
    }
    return Mesh(std::move(nodes), std::move(elements), std::move(regions));
}

int petal_polygon_vertices(double outer_radius, std::span<const Point2> petal_centers, double petal_radius,
                           int refinement) {
    return cable_layout(outer_radius, petal_centers, petal_radius, refinement).m;
}

Mesh generate_petal_cable(double R, std::span<const Point2> centers, double rp, int refinement) {
    const CableLayout lay = cable_layout(R, centers, rp, refinement);
    const double h = lay.h;
    const double s = lay.s;
    const int m = lay.m;

    struct Candidate {
        Point2 p;
        double spacing;
        int owner = -1;  // petal whose interior this point fills
    };

    std::vector<Point2> accepted;
    std::vector<double> accepted_spacing;
    PointGrid grid(2.0 * R, h);
    PointGrid edge_grid(2.0 * R, h);
    std::vector<std::pair<Point2, double>> petal_edges;  // midpoint, half length

    auto accept = [&](Point2 p, double spacing) {
        int id = static_cast<int>(accepted.size());
        accepted.push_back(p);
        accepted_spacing.push_back(spacing);
        grid.insert(p, id);
    };

    // Petal polygons; vertex phase follows the petal's polar angle so rotated
    // layouts produce rotated point sets.
    std::vector<double> petal_phase(centers.size());
    for (std::size_t k = 0; k < centers.size(); ++k) {
        const Point2 c = centers[k];
        petal_phase[k] = norm(c) > 0.0 ? std::atan2(c.y, c.x) : 0.0;
        std::vector<Point2> poly;
        for (int j = 0; j < m; ++j) {
            double a = petal_phase[k] + kTwoPi * j / m;
            poly.push_back(c + rp * Point2{std::cos(a), std::sin(a)});
        }
        for (int j = 0; j < m; ++j) {
            accept(poly[static_cast<std::size_t>(j)], s);
            Point2 a = poly[static_cast<std::size_t>(j)];
            Point2 b = poly[static_cast<std::size_t>((j + 1) % m)];
            edge_grid.insert(0.5 * (a + b), static_cast<int>(petal_edges.size()));
            petal_edges.push_back({0.5 * (a + b), 0.5 * distance(a, b)});
        }
    }
    for (int j = 0; j < lay.m_out; ++j) {
        double a = kTwoPi * j / lay.m_out;
        accept({R * std::cos(a), R * std::sin(a)}, h);
    }

    std::vector<Candidate> candidates;
    const double row = 0.5 * std::sqrt(3.0);
    for (std::size_t k = 0; k < centers.size(); ++k) {
        const Point2 c = centers[k];
        // Interior rings at roughly equilateral spacing.
        for (int j = 1;; ++j) {
            double rho = rp - j * row * s;
            if (rho < 0.6 * s) {
                candidates.push_back({c, s, static_cast<int>(k)});
                break;
            }
            int count = std::max(3, static_cast<int>(std::lround(kTwoPi * rho / s)));
            double phase = petal_phase[k] + (j % 2 ? 0.5 : 0.0) * kTwoPi / count;
            for (int i = 0; i < count; ++i) {
                double a = phase + kTwoPi * i / count;
                candidates.push_back({c + rho * Point2{std::cos(a), std::sin(a)}, s, static_cast<int>(k)});
            }
        }
        // Exterior rings grading from s to h.
        double spacing = s;
        double rho = rp;
        for (int j = 1;; ++j) {
            rho += row * spacing;
            if (rho > 2.0 * R) break;
            int count = std::max(3, static_cast<int>(std::lround(kTwoPi * rho / spacing)));
            double phase = petal_phase[k] + (j % 2 ? 0.5 : 0.0) * kTwoPi / count;
            for (int i = 0; i < count; ++i) {
                double a = phase + kTwoPi * i / count;
                candidates.push_back({c + rho * Point2{std::cos(a), std::sin(a)}, spacing});
            }
            if (spacing >= h) break;
            spacing = std::min(h, 1.3 * spacing);
        }
    }
    {
        double rho = R - row * h;
        for (int j = 0; j < lay.m_out; ++j) {
            double a = kTwoPi * (j + 0.5) / lay.m_out;
            candidates.push_back({rho * Point2{std::cos(a), std::sin(a)}, h});
        }
    }
    candidates.push_back({{0.0, 0.0}, h});
    for (int i = 1;; ++i) {
        double rho = i * h;
        if (rho > R - 1.2 * h) break;
        int count = 6 * i;
        for (int j = 0; j < count; ++j) {
            double a = kTwoPi * j / count;
            candidates.push_back({rho * Point2{std::cos(a), std::sin(a)}, h});
        }
    }

    // Finer points first so graded rings of one petal never crowd out another.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.spacing < b.spacing; });
    for (const auto& cand : candidates) {
        if (norm(cand.p) > R - 0.3 * h) continue;
        bool ok = true;
        for (std::size_t k = 0; k < centers.size() && ok; ++k) {
            if (cand.owner != static_cast<int>(k) && distance(cand.p, centers[k]) < rp + 0.4 * s) ok = false;
        }
        grid.for_each_near(cand.p, [&](int id) {
            if (!ok) return;
            double limit = 0.6 * std::max(cand.spacing, accepted_spacing[static_cast<std::size_t>(id)]);
            if (distance(cand.p, accepted[static_cast<std::size_t>(id)]) < limit) ok = false;
        });
        if (!ok) continue;
        // Keep petal polygon edges Gabriel so the triangulation contains them.
        edge_grid.for_each_near(cand.p, [&](int id) {
            if (!ok) return;
            const auto& [mid, half] = petal_edges[static_cast<std::size_t>(id)];
            if (distance(cand.p, mid) < 1.1 * half) ok = false;
        });
        if (ok) accept(cand.p, cand.spacing);
    }

    std::vector<Triangle> elements = detail::delaunay_triangulate(accepted);

    auto petal_of = [&](Point2 q) -> int {
        for (std::size_t k = 0; k < centers.size(); ++k) {
            Point2 d = q - centers[k];
            if (norm(d) >= rp) continue;
            double a = std::atan2(d.y, d.x) - petal_phase[k];
            a -= kTwoPi * std::floor(a / kTwoPi);
            int j = std::min(m - 1, static_cast<int>(a / (kTwoPi / m)));
            double a0 = petal_phase[k] + kTwoPi * j / m;
            double a1 = petal_phase[k] + kTwoPi * (j + 1) / m;
            Point2 v0 = centers[k] + rp * Point2{std::cos(a0), std::sin(a0)};
            Point2 v1 = centers[k] + rp * Point2{std::cos(a1), std::sin(a1)};
            if (orient2d(v0, v1, q) > 0.0) return static_cast<int>(k) + 1;
        }
        return kMatrixRegion;
    };
    std::vector<int> regions(elements.size());
    for (std::size_t e = 0; e < elements.size(); ++e) {
        const auto& t = elements[e];
        Point2 g = (1.0 / 3.0) * (accepted[static_cast<std::size_t>(t[0])] + accepted[static_cast<std::size_t>(t[1])] +
                                  accepted[static_cast<std::size_t>(t[2])]);
        regions[e] = petal_of(g);
    }

    // Every petal polygon edge must be a mesh edge (polygon vertices are the
    // first m * petals points).
    std::unordered_set<std::uint64_t> edge_set;
    auto key = [](int a, int b) {
        return (static_cast<std::uint64_t>(std::min(a, b)) << 32) | static_cast<std::uint64_t>(std::max(a, b));
    };
    for (const auto& t : elements) {
        for (int i = 0; i < 3; ++i) edge_set.insert(key(t[static_cast<std::size_t>(i)], t[static_cast<std::size_t>((i + 1) % 3)]));
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
        for (int j = 0; j < m; ++j) {
            int a = static_cast<int>(k) * m + j;
            int b = static_cast<int>(k) * m + (j + 1) % m;
            if (!edge_set.contains(key(a, b)))
                throw std::logic_error("petal mesh: boundary edge of petal " + std::to_string(k + 1) + " not recovered");
        }
    }

    Mesh mesh(std::move(accepted), std::move(elements), std::move(regions));
    if (mesh.loop_count() != 1 || mesh.loop_edges(0).size() != static_cast<std::size_t>(lay.m_out))
        throw std::logic_error("petal mesh: outer boundary is not the expected polygon");
    return mesh;
}

}  // namespace qlert
