#include "qlert/electrodes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qlert/error.hpp"

namespace qlert {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Angle difference wrapped into [-pi, pi).
double wrap(double a) {
    a = std::fmod(a + std::numbers::pi, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    return a - std::numbers::pi;
}

}  // namespace

ElectrodeLayout ElectrodeLayout::uniform(int count, double coverage, double phase) {
    ElectrodeLayout layout;
    layout.count = count;
    layout.coverage = coverage;
    for (int k = 0; k < std::max(count, 0); ++k) layout.offsets.push_back(phase + kTwoPi * k / count);
    layout.validate();
    return layout;
}

double ElectrodeLayout::half_width() const { return coverage * std::numbers::pi / count; }

void ElectrodeLayout::validate() const {
    if (count < 2) throw InvalidArgument("electrode layout needs at least 2 electrodes");
    if (!(coverage > 0.0 && coverage < 1.0))
        throw InvalidArgument("electrode coverage must lie in (0, 1); arcs would overlap");
    if (offsets.size() != static_cast<std::size_t>(count))
        throw InvalidArgument("electrode layout has " + std::to_string(offsets.size()) + " offsets for " +
                              std::to_string(count) + " electrodes");
    const double w = half_width();
    for (int i = 0; i < count; ++i) {
        for (int j = i + 1; j < count; ++j) {
            if (std::abs(wrap(offsets[static_cast<std::size_t>(i)] - offsets[static_cast<std::size_t>(j)])) <= 2.0 * w)
                throw InvalidArgument("electrodes " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
        }
    }
}

Mesh tag_electrodes(const Mesh& mesh, const ElectrodeLayout& layout) {
    layout.validate();
    if (mesh.loop_count() == 0) throw InvalidArgument("tag_electrodes: mesh has no boundary");
    const auto& edges = mesh.boundary_edges();
    std::vector<int> ids(edges.size(), kNoElectrode);
    std::vector<int> node_owner(mesh.node_count(), kNoElectrode);
    std::vector<int> edge_count(static_cast<std::size_t>(layout.count), 0);
    const double w = layout.half_width();

    for (int e : mesh.loop_edges(0)) {
        const auto& edge = edges[static_cast<std::size_t>(e)];
        Point2 mid = 0.5 * (mesh.node(edge.a) + mesh.node(edge.b));
        double angle = std::atan2(mid.y, mid.x);
        for (int k = 0; k < layout.count; ++k) {
            if (std::abs(wrap(angle - layout.offsets[static_cast<std::size_t>(k)])) > w) continue;
            ids[static_cast<std::size_t>(e)] = k;
            ++edge_count[static_cast<std::size_t>(k)];
            for (int v : {edge.a, edge.b}) {
                int& owner = node_owner[static_cast<std::size_t>(v)];
                if (owner != kNoElectrode && owner != k)
                    throw InvalidArgument("electrodes " + std::to_string(owner) + " and " + std::to_string(k) +
                                          " share boundary node " + std::to_string(v) + "; mesh too coarse for layout");
                owner = k;
            }
            break;
        }
    }
    for (int k = 0; k < layout.count; ++k) {
        if (edge_count[static_cast<std::size_t>(k)] == 0)
            throw InvalidArgument("electrode " + std::to_string(k) + " covers no boundary edge; mesh too coarse");
    }
    return mesh.with_electrodes(ids);
}

}  // namespace qlert
