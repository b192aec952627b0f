#pragma once

#include <vector>

#include "qlert/mesh.hpp"

namespace qlert {

// Electrodes as arcs of the outer boundary. Each electrode covers an angular
// width of coverage * 2pi / count centred on its offset (radians).
struct ElectrodeLayout {
    int count = 0;
    double coverage = 0.0;
    std::vector<double> offsets;

    // `count` equal electrodes, uniformly spaced, the first centred at `phase`.
    static ElectrodeLayout uniform(int count, double coverage, double phase = 0.0);

    double half_width() const;

    // Throws InvalidArgument unless count >= 2, coverage is in (0, 1), there is
    // one offset per electrode and the arcs are pairwise disjoint.
    void validate() const;
};

// Tag outer-loop boundary edges (loop 0) whose midpoint angle, measured about
// the origin, falls inside an electrode arc. Other edges get kNoElectrode.
// Throws InvalidArgument if an electrode receives no edge or two electrodes
// share a node.
Mesh tag_electrodes(const Mesh& mesh, const ElectrodeLayout& layout);

}  // namespace qlert
