#include "qlert/mesh.hpp"

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>

#include "qlert/error.hpp"

namespace qlert {

namespace {

std::uint64_t edge_key(int a, int b) {
    auto lo = static_cast<std::uint64_t>(std::min(a, b));
    auto hi = static_cast<std::uint64_t>(std::max(a, b));
    return (lo << 32) | hi;
}

}  // namespace

RegionInfo classify_region(int label) {
    if (label == kMatrixRegion) return {RegionKind::matrix, 0};
    if (label > 0) return {RegionKind::inclusion, label};
    return {RegionKind::defect, -label};
}

Mesh::Mesh(std::vector<Point2> nodes, std::vector<Triangle> elements, std::vector<int> element_region,
           std::vector<BoundaryEdge> boundary)
    : nodes_(std::move(nodes)), elements_(std::move(elements)), element_region_(std::move(element_region)) {
    if (element_region_.size() != elements_.size()) {
        throw InvalidArgument("mesh: region label count " + std::to_string(element_region_.size()) +
                              " does not match element count " + std::to_string(elements_.size()));
    }
    const auto n = static_cast<long>(nodes_.size());
    for (std::size_t e = 0; e < elements_.size(); ++e) {
        for (int v : elements_[e]) {
            if (v < 0 || v >= n) {
                throw InvalidArgument("mesh: element " + std::to_string(e) + " references node " +
                                      std::to_string(v) + " outside [0, " + std::to_string(n) + ")");
            }
        }
        if (!(element_area(e) > 0.0)) {
            throw InvalidArgument("mesh: element " + std::to_string(e) + " is not positively oriented");
        }
    }
    for (int label : element_region_) region_table_.emplace(label, classify_region(label));
    build_boundary(std::move(boundary));
    build_loops();
}

void Mesh::build_boundary(std::vector<BoundaryEdge> given) {
    // Count element edges; boundary edges appear exactly once.
    std::unordered_map<std::uint64_t, std::pair<int, std::array<int, 2>>> edges;
    edges.reserve(elements_.size() * 2);
    for (const auto& t : elements_) {
        for (int i = 0; i < 3; ++i) {
            int a = t[static_cast<std::size_t>(i)];
            int b = t[static_cast<std::size_t>((i + 1) % 3)];
            auto [it, inserted] = edges.try_emplace(edge_key(a, b), 0, std::array<int, 2>{a, b});
            ++it->second.first;
            if (it->second.first > 2) {
                throw InvalidArgument("mesh: edge (" + std::to_string(a) + ", " + std::to_string(b) +
                                      ") is shared by more than two elements");
            }
        }
    }
    std::vector<BoundaryEdge> topo;
    for (const auto& [key, entry] : edges) {
        if (entry.first == 1) topo.push_back({entry.second[0], entry.second[1], kNoElectrode});
    }

    if (given.empty()) {
        std::sort(topo.begin(), topo.end(), [](const BoundaryEdge& l, const BoundaryEdge& r) {
            return std::pair(l.a, l.b) < std::pair(r.a, r.b);
        });
        boundary_ = std::move(topo);
        return;
    }

    std::unordered_map<std::uint64_t, std::array<int, 2>> oriented;
    for (const auto& e : topo) oriented.emplace(edge_key(e.a, e.b), std::array<int, 2>{e.a, e.b});
    std::unordered_map<std::uint64_t, int> seen;
    for (auto& e : given) {
        auto key = edge_key(e.a, e.b);
        auto it = oriented.find(key);
        if (it == oriented.end()) {
            throw InvalidArgument("mesh: boundary edge (" + std::to_string(e.a) + ", " + std::to_string(e.b) +
                                  ") is not on the topological boundary");
        }
        if (++seen[key] > 1) {
            throw InvalidArgument("mesh: boundary edge (" + std::to_string(e.a) + ", " + std::to_string(e.b) +
                                  ") listed twice");
        }
        e.a = it->second[0];
        e.b = it->second[1];
    }
    if (seen.size() != oriented.size()) {
        throw InvalidArgument("mesh: boundary list has " + std::to_string(seen.size()) +
                              " edges but the topological boundary has " + std::to_string(oriented.size()));
    }
    boundary_ = std::move(given);
}

void Mesh::build_loops() {
    loops_.clear();
    edge_loop_.assign(boundary_.size(), -1);
    std::unordered_map<int, int> starting_at;
    for (std::size_t i = 0; i < boundary_.size(); ++i) starting_at[boundary_[i].a] = static_cast<int>(i);

    struct Loop {
        std::vector<int> edges;
        double signed_area = 0.0;
        int min_node = 0;
    };
    std::vector<Loop> found;
    for (std::size_t start = 0; start < boundary_.size(); ++start) {
        if (edge_loop_[start] != -1) continue;
        Loop loop;
        loop.min_node = boundary_[start].a;
        int cur = static_cast<int>(start);
        while (edge_loop_[static_cast<std::size_t>(cur)] == -1) {
            edge_loop_[static_cast<std::size_t>(cur)] = static_cast<int>(found.size());
            loop.edges.push_back(cur);
            const auto& e = boundary_[static_cast<std::size_t>(cur)];
            loop.signed_area += 0.5 * cross(node(e.a), node(e.b));
            loop.min_node = std::min(loop.min_node, e.a);
            auto next = starting_at.find(e.b);
            if (next == starting_at.end()) throw InvalidArgument("mesh: boundary is not a closed loop");
            cur = next->second;
        }
        found.push_back(std::move(loop));
    }
    // Outer loop first (largest positive area), then holes by smallest node id.
    std::size_t outer = 0;
    for (std::size_t i = 1; i < found.size(); ++i) {
        if (found[i].signed_area > found[outer].signed_area) outer = i;
    }
    std::vector<std::size_t> order(found.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        return std::pair(l != outer, found[l].min_node) < std::pair(r != outer, found[r].min_node);
    });
    std::vector<int> remap(found.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        remap[order[i]] = static_cast<int>(i);
        loops_.push_back(std::move(found[order[i]].edges));
    }
    for (auto& l : edge_loop_) l = remap[static_cast<std::size_t>(l)];
}

double Mesh::element_area(std::size_t e) const {
    const auto& t = elements_[e];
    return 0.5 * orient2d(node(t[0]), node(t[1]), node(t[2]));
}

Point2 Mesh::centroid(std::size_t e) const {
    const auto& t = elements_[e];
    return (1.0 / 3.0) * (node(t[0]) + node(t[1]) + node(t[2]));
}

double Mesh::element_diameter(std::size_t e) const {
    const auto& t = elements_[e];
    return std::max({distance(node(t[0]), node(t[1])), distance(node(t[1]), node(t[2])),
                     distance(node(t[2]), node(t[0]))});
}

double Mesh::max_element_diameter() const {
    double h = 0.0;
    for (std::size_t e = 0; e < elements_.size(); ++e) h = std::max(h, element_diameter(e));
    return h;
}

double Mesh::total_area() const {
    double a = 0.0;
    for (std::size_t e = 0; e < elements_.size(); ++e) a += element_area(e);
    return a;
}

double Mesh::region_area(int label) const {
    double a = 0.0;
    for (std::size_t e = 0; e < elements_.size(); ++e) {
        if (element_region_[e] == label) a += element_area(e);
    }
    return a;
}

std::vector<int> Mesh::loop_nodes(std::size_t loop) const {
    std::vector<int> out;
    out.reserve(loops_[loop].size());
    for (int e : loops_[loop]) out.push_back(boundary_[static_cast<std::size_t>(e)].a);
    return out;
}

int Mesh::electrode_count() const {
    int m = -1;
    for (const auto& e : boundary_) m = std::max(m, e.electrode);
    return m + 1;
}

std::vector<int> Mesh::electrode_nodes(int electrode) const {
    std::vector<int> out;
    for (const auto& e : boundary_) {
        if (e.electrode == electrode) {
            out.push_back(e.a);
            out.push_back(e.b);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<int> Mesh::elements_in_region(int label) const {
    std::vector<int> out;
    for (std::size_t e = 0; e < elements_.size(); ++e) {
        if (element_region_[e] == label) out.push_back(static_cast<int>(e));
    }
    return out;
}

Mesh Mesh::relabeled(std::span<const char> mask, int label) const {
    if (mask.size() != elements_.size()) throw InvalidArgument("relabeled: mask size does not match element count");
    Mesh out = *this;
    for (std::size_t e = 0; e < elements_.size(); ++e) {
        if (mask[e]) out.element_region_[e] = label;
    }
    out.region_table_.clear();
    for (int l : out.element_region_) out.region_table_.emplace(l, classify_region(l));
    return out;
}

Mesh Mesh::with_electrodes(std::span<const int> electrode_per_edge) const {
    if (electrode_per_edge.size() != boundary_.size())
        throw InvalidArgument("with_electrodes: one id per boundary edge required");
    Mesh out = *this;
    for (std::size_t i = 0; i < boundary_.size(); ++i) out.boundary_[i].electrode = electrode_per_edge[i];
    return out;
}

}  // namespace qlert
