#pragma once

#include <set>
#include <vector>

#include "qlert/fem.hpp"
#include "qlert/materials.hpp"
#include "qlert/mesh.hpp"

namespace qlert {

// Superconducting cable cross-section: a linear matrix disk with E-J petals.
// Regions: 0 matrix, k > 0 petal k, k < 0 defects (conductivity drop).
struct CableScenario {
    double outer_radius = 0.6e-3;  // m
    std::vector<Point2> petal_centers;
    double petal_radius = 0.0;
    int refinement = 2;
    double matrix_sigma = 5.55e7;  // S/m
    PowerLawEJ petal_law{8e9, 27.0, 1e-4};
    Regularization regularization{};
    double defect_factor = 1e-3;  // defect conductivity / matrix conductivity

    // Five petals of radius 0.096 mm on the x axis at 0.21 mm pitch. The
    // chain carries enough current for the petals to leave the sigma_cap
    // plateau near V0 = 1e-2 V under the x-linear boundary data.
    static CableScenario reference(int refinement = 2);

    void validate() const;  // throws InvalidArgument / InvalidGeometry
    Mesh mesh() const;
    std::set<int> petal_labels() const;

    MaterialModel matrix_material() const;
    MaterialModel petal_material() const;
    MaterialModel defect_material() const;
    // Matrix, every petal, and every defect label present on `mesh`.
    MaterialMap materials(const Mesh& mesh) const;

    // f = v0 * x / outer_radius on the outer boundary loop.
    DirichletBc x_linear(const Mesh& mesh, double v0) const;
};

}  // namespace qlert
