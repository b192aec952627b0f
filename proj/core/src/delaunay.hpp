#pragma once

#include <span>
#include <vector>

#include "qlert/mesh.hpp"

namespace qlert::detail {

// Bowyer-Watson Delaunay triangulation of a point set. Returns counter-clockwise
// triangles covering the convex hull. Points are inserted in a deterministic
// spatially coherent order.
std::vector<Triangle> delaunay_triangulate(std::span<const Point2> points);

}  // namespace qlert::detail
