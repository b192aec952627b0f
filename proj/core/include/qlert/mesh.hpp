#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

namespace qlert {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Point2 a, Point2 b) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

// Twice the signed area of (a, b, c); positive for counter-clockwise order.
inline double orient2d(Point2 a, Point2 b, Point2 c) { return cross(b - a, c - a); }

using Triangle = std::array<int, 3>;

inline constexpr int kNoElectrode = -1;

// Boundary edge oriented with the domain on its left.
struct BoundaryEdge {
    int a = 0;
    int b = 0;
    int electrode = kNoElectrode;

    friend bool operator==(const BoundaryEdge&, const BoundaryEdge&) = default;
};

// Region labels: 0 is the matrix, k > 0 is inclusion k, k < 0 is defect -k.
inline constexpr int kMatrixRegion = 0;

enum class RegionKind { matrix, inclusion, defect };

struct RegionInfo {
    RegionKind kind = RegionKind::matrix;
    int index = 0;  // inclusion or defect number, 0 for the matrix

    friend bool operator==(const RegionInfo&, const RegionInfo&) = default;
};

RegionInfo classify_region(int label);

// Triangulated 2D domain. Immutable after construction; the constructor checks
// index ranges, positive orientation, and that the boundary edge list covers the
// topological boundary exactly once. An empty boundary list is derived from the
// elements.
class Mesh {
public:
    Mesh() = default;
    Mesh(std::vector<Point2> nodes, std::vector<Triangle> elements, std::vector<int> element_region,
         std::vector<BoundaryEdge> boundary = {});

    const std::vector<Point2>& nodes() const noexcept { return nodes_; }
    const std::vector<Triangle>& elements() const noexcept { return elements_; }
    const std::vector<int>& element_region() const noexcept { return element_region_; }
    const std::vector<BoundaryEdge>& boundary_edges() const noexcept { return boundary_; }
    const std::map<int, RegionInfo>& region_table() const noexcept { return region_table_; }

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t element_count() const noexcept { return elements_.size(); }

    Point2 node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    const Triangle& element(std::size_t e) const { return elements_[e]; }
    int region(std::size_t e) const { return element_region_[e]; }

    double element_area(std::size_t e) const;
    Point2 centroid(std::size_t e) const;
    double element_diameter(std::size_t e) const;
    double max_element_diameter() const;
    double total_area() const;
    double region_area(int label) const;

    // Boundary loops. Loop 0 is the outer boundary, holes follow. Edges of each
    // loop are stored in traversal order.
    std::size_t loop_count() const noexcept { return loops_.size(); }
    const std::vector<int>& loop_edges(std::size_t loop) const { return loops_[loop]; }
    int edge_loop(std::size_t edge) const { return edge_loop_[edge]; }
    std::vector<int> loop_nodes(std::size_t loop) const;

    // Electrode ids present on the boundary, and the nodes of one electrode.
    int electrode_count() const;
    std::vector<int> electrode_nodes(int electrode) const;

    std::vector<int> elements_in_region(int label) const;

    // Copy with the elements flagged in `mask` moved to region `label`.
    Mesh relabeled(std::span<const char> mask, int label) const;

    // Copy with a new electrode assignment for the boundary edges (same order).
    Mesh with_electrodes(std::span<const int> electrode_per_edge) const;

private:
    void build_boundary(std::vector<BoundaryEdge> given);
    void build_loops();

    std::vector<Point2> nodes_;
    std::vector<Triangle> elements_;
    std::vector<int> element_region_;
    std::vector<BoundaryEdge> boundary_;
    std::map<int, RegionInfo> region_table_;
    std::vector<std::vector<int>> loops_;
    std::vector<int> edge_loop_;
};

// Element masks are one char per element (0 or 1).
using ElementMask = std::vector<char>;

}  // namespace qlert
