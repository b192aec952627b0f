#include "delaunay.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qlert::detail {

namespace {

struct Tri {
    std::array<int, 3> v;
    std::array<int, 3> n;  // n[i] is the neighbour across the edge opposite v[i]
    bool alive = true;
};

long double incircle(Point2 a, Point2 b, Point2 c, Point2 d) {
    long double adx = a.x - d.x, ady = a.y - d.y;
    long double bdx = b.x - d.x, bdy = b.y - d.y;
    long double cdx = c.x - d.x, cdy = c.y - d.y;
    long double ad = adx * adx + ady * ady;
    long double bd = bdx * bdx + bdy * bdy;
    long double cd = cdx * cdx + cdy * cdy;
    return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

class Triangulator {
public:
    explicit Triangulator(std::vector<Point2> pts) : p_(std::move(pts)) {}

    std::vector<Triangle> run(std::size_t n_real) {
        // Super triangle vertices are the last three points.
        const int s0 = static_cast<int>(n_real);
        tris_.push_back({{s0, s0 + 1, s0 + 2}, {-1, -1, -1}, true});
        last_ = 0;
        for (std::size_t i = 0; i < n_real; ++i) insert(static_cast<int>(i));

        std::vector<Triangle> out;
        for (const auto& t : tris_) {
            if (!t.alive) continue;
            if (t.v[0] >= s0 || t.v[1] >= s0 || t.v[2] >= s0) continue;
            out.push_back({t.v[0], t.v[1], t.v[2]});
        }
        return out;
    }

private:
    bool contains_strictly_left(int a, int b, int q) const { return orient2d(p_[a], p_[b], p_[q]) > 0.0; }

    int locate(int q) const {
        int t = last_;
        const std::size_t limit = 4 * tris_.size() + 16;
        for (std::size_t step = 0; step < limit; ++step) {
            const auto& tr = tris_[static_cast<std::size_t>(t)];
            bool moved = false;
            for (int i = 0; i < 3; ++i) {
                int a = tr.v[static_cast<std::size_t>((i + 1) % 3)];
                int b = tr.v[static_cast<std::size_t>((i + 2) % 3)];
                if (orient2d(p_[a], p_[b], p_[q]) < 0.0 && tr.n[static_cast<std::size_t>(i)] >= 0) {
                    t = tr.n[static_cast<std::size_t>(i)];
                    moved = true;
                    break;
                }
            }
            if (!moved) return t;
        }
        // Walk failed to terminate; fall back to a scan.
        for (std::size_t i = 0; i < tris_.size(); ++i) {
            const auto& tr = tris_[i];
            if (!tr.alive) continue;
            if (orient2d(p_[tr.v[0]], p_[tr.v[1]], p_[q]) >= 0.0 && orient2d(p_[tr.v[1]], p_[tr.v[2]], p_[q]) >= 0.0 &&
                orient2d(p_[tr.v[2]], p_[tr.v[0]], p_[q]) >= 0.0)
                return static_cast<int>(i);
        }
        throw std::logic_error("delaunay: point location failed");
    }

    bool in_circumcircle(int t, int q) const {
        const auto& tr = tris_[static_cast<std::size_t>(t)];
        return incircle(p_[tr.v[0]], p_[tr.v[1]], p_[tr.v[2]], p_[q]) > 0.0L;
    }

    void insert(int q) {
        const int t0 = locate(q);
        cavity_.clear();
        cavity_.push_back(t0);
        mark_.resize(tris_.size(), 0);
        mark_[static_cast<std::size_t>(t0)] = 1;
        {
            // q on an edge of t0: the neighbour across that edge must go as well.
            const auto& tr = tris_[static_cast<std::size_t>(t0)];
            for (int i = 0; i < 3; ++i) {
                int nb = tr.n[static_cast<std::size_t>(i)];
                int a = tr.v[static_cast<std::size_t>((i + 1) % 3)];
                int b = tr.v[static_cast<std::size_t>((i + 2) % 3)];
                if (nb >= 0 && !contains_strictly_left(a, b, q)) {
                    mark_[static_cast<std::size_t>(nb)] = 1;
                    cavity_.push_back(nb);
                }
            }
        }
        for (std::size_t k = 0; k < cavity_.size(); ++k) {
            const auto& tr = tris_[static_cast<std::size_t>(cavity_[k])];
            for (int nb : tr.n) {
                if (nb < 0 || mark_[static_cast<std::size_t>(nb)]) continue;
                if (in_circumcircle(nb, q)) {
                    mark_[static_cast<std::size_t>(nb)] = 1;
                    cavity_.push_back(nb);
                }
            }
        }

        // Keep the cavity star-shaped with respect to q.
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t k = 0; k < cavity_.size(); ++k) {
                int c = cavity_[k];
                if (c == t0) continue;
                const auto& tr = tris_[static_cast<std::size_t>(c)];
                for (int i = 0; i < 3; ++i) {
                    int nb = tr.n[static_cast<std::size_t>(i)];
                    if (nb >= 0 && mark_[static_cast<std::size_t>(nb)]) continue;
                    int a = tr.v[static_cast<std::size_t>((i + 1) % 3)];
                    int b = tr.v[static_cast<std::size_t>((i + 2) % 3)];
                    if (!contains_strictly_left(a, b, q)) {
                        mark_[static_cast<std::size_t>(c)] = 0;
                        cavity_.erase(cavity_.begin() + static_cast<long>(k));
                        changed = true;
                        break;
                    }
                }
                if (changed) break;
            }
        }

        rim_.clear();
        for (int c : cavity_) {
            const auto& tr = tris_[static_cast<std::size_t>(c)];
            for (int i = 0; i < 3; ++i) {
                int nb = tr.n[static_cast<std::size_t>(i)];
                if (nb >= 0 && mark_[static_cast<std::size_t>(nb)]) continue;
                rim_.push_back({tr.v[static_cast<std::size_t>((i + 1) % 3)], tr.v[static_cast<std::size_t>((i + 2) % 3)], nb});
            }
        }
        for (int c : cavity_) {
            tris_[static_cast<std::size_t>(c)].alive = false;
            mark_[static_cast<std::size_t>(c)] = 0;
        }

        const int first_new = static_cast<int>(tris_.size());
        for (const auto& r : rim_) {
            const int id = static_cast<int>(tris_.size());
            tris_.push_back({{r.a, r.b, q}, {-1, -1, r.outside}, true});
            if (r.outside >= 0) {
                auto& out = tris_[static_cast<std::size_t>(r.outside)];
                for (int j = 0; j < 3; ++j) {
                    int oa = out.v[static_cast<std::size_t>((j + 1) % 3)];
                    int ob = out.v[static_cast<std::size_t>((j + 2) % 3)];
                    if (oa == r.b && ob == r.a) out.n[static_cast<std::size_t>(j)] = id;
                }
            }
        }
        const int count = static_cast<int>(tris_.size()) - first_new;
        for (int i = 0; i < count; ++i) {
            auto& t = tris_[static_cast<std::size_t>(first_new + i)];
            const int a = t.v[0];
            const int b = t.v[1];
            for (int j = 0; j < count; ++j) {
                if (j == i) continue;
                const auto& u = tris_[static_cast<std::size_t>(first_new + j)];
                if (u.v[0] == b) t.n[0] = first_new + j;  // shares edge (b, q)
                if (u.v[1] == a) t.n[1] = first_new + j;  // shares edge (q, a)
            }
        }
        last_ = first_new;
        mark_.resize(tris_.size(), 0);
    }

    std::vector<Point2> p_;
    std::vector<Tri> tris_;
    std::vector<int> cavity_;
    std::vector<char> mark_;
    struct RimEdge {
        int a, b, outside;
    };
    std::vector<RimEdge> rim_;
    int last_ = 0;
};

}  // namespace

std::vector<Triangle> delaunay_triangulate(std::span<const Point2> points) {
    const std::size_t n = points.size();
    if (n < 3) return {};

    double xmin = points[0].x, xmax = points[0].x, ymin = points[0].y, ymax = points[0].y;
    for (const auto& p : points) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    const double scale = std::max(xmax - xmin, ymax - ymin);
    if (!(scale > 0.0)) return {};

    // Normalise to the unit box and sort along a snake-ordered grid.
    std::vector<Point2> local(n);
    for (std::size_t i = 0; i < n; ++i) local[i] = {(points[i].x - xmin) / scale, (points[i].y - ymin) / scale};
    const auto cells = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(n) / 4.0)));
    auto cell_key = [&](const Point2& p) {
        auto row = std::min(cells - 1, static_cast<std::size_t>(p.y * static_cast<double>(cells)));
        auto col = std::min(cells - 1, static_cast<std::size_t>(p.x * static_cast<double>(cells)));
        if (row % 2 == 1) col = cells - 1 - col;
        return row * cells + col;
    };
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return cell_key(local[a]) < cell_key(local[b]); });

    std::vector<Point2> sorted;
    sorted.reserve(n + 3);
    for (auto i : order) sorted.push_back(local[i]);
    sorted.push_back({-40.0, -40.0});
    sorted.push_back({41.0, -40.0});
    sorted.push_back({0.5, 41.0});

    Triangulator tri(std::move(sorted));
    auto out = tri.run(n);
    for (auto& t : out) {
        for (auto& v : t) v = static_cast<int>(order[static_cast<std::size_t>(v)]);
    }
    return out;
}

}  // namespace qlert::detail
