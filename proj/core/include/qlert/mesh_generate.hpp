#pragma once

#include <span>

#include "qlert/mesh.hpp"

namespace qlert {

// Structured polar mesh of the disk of the given radius centred at the origin.
// Refinement k uses 2^k rings; ring i carries 6i nodes.
Mesh generate_disk(double radius, int refinement);

enum class AnnulusCore {
    hollow,  // only the annulus is meshed; the inner circle is a hole
    filled,  // the inner disk is meshed too and labelled inclusion 1
};

// Log-polar annulus mesh: geometric radial grading with a fixed angular count,
// each cell split into four triangles around its centre. The mesh is invariant
// under rotation by one angular step and under both coordinate reflections.
// Refinement k uses 16 * 2^(k-1) angular sectors.
Mesh generate_annulus(double r_inner, double r_outer, int refinement, AnnulusCore core = AnnulusCore::hollow);

// Disk of radius `outer_radius` containing circular petals (inclusion k for the
// k-th centre, 1-based). Each petal boundary is a regular polygon whose edges are
// mesh edges; spacing is refined near the petals.
Mesh generate_petal_cable(double outer_radius, std::span<const Point2> petal_centers, double petal_radius,
                          int refinement);

// Number of polygon vertices used for each petal boundary at the given settings.
int petal_polygon_vertices(double outer_radius, std::span<const Point2> petal_centers, double petal_radius,
                           int refinement);

}  // namespace qlert
