#include "qlert/scenario.hpp"

#include <cmath>

#include "qlert/error.hpp"
#include "qlert/mesh_generate.hpp"
#include "qlert/solver.hpp"

namespace qlert {

CableScenario CableScenario::reference(int refinement) {
    CableScenario s;
    s.refinement = refinement;
    s.petal_radius = 0.096e-3;
    for (int k = -2; k <= 2; ++k) s.petal_centers.push_back({0.21e-3 * k, 0.0});
    return s;
}

void CableScenario::validate() const {
    if (!(outer_radius > 0.0)) throw InvalidArgument("cable: outer radius must be positive");
    if (!petal_centers.empty() && !(petal_radius > 0.0)) throw InvalidArgument("cable: petal radius must be positive");
    if (refinement < 1) throw InvalidArgument("cable: refinement must be at least 1");
    if (!(matrix_sigma > 0.0)) throw InvalidArgument("cable: matrix conductivity must be positive");
    if (!(petal_law.jc > 0.0 && petal_law.n > 1.0 && petal_law.e0 > 0.0))
        throw InvalidArgument("cable: E-J law needs jc > 0, n > 1, e0 > 0");
    if (!(defect_factor > 0.0)) throw InvalidArgument("cable: defect factor must be positive");
}

Mesh CableScenario::mesh() const {
    validate();
    return generate_petal_cable(outer_radius, petal_centers, petal_radius, refinement);
}

std::set<int> CableScenario::petal_labels() const {
    std::set<int> out;
    for (std::size_t k = 0; k < petal_centers.size(); ++k) out.insert(static_cast<int>(k) + 1);
    return out;
}

MaterialModel CableScenario::matrix_material() const { return MaterialModel::linear(matrix_sigma); }

MaterialModel CableScenario::petal_material() const {
    return MaterialModel::power_law(petal_law.jc, petal_law.n, petal_law.e0, regularization);
}

MaterialModel CableScenario::defect_material() const { return MaterialModel::linear(defect_factor * matrix_sigma); }

MaterialMap CableScenario::materials(const Mesh& mesh) const {
    MaterialMap map;
    for (const auto& [label, info] : mesh.region_table()) {
        switch (info.kind) {
            case RegionKind::matrix: map.emplace(label, matrix_material()); break;
            case RegionKind::inclusion: map.emplace(label, petal_material()); break;
            case RegionKind::defect: map.emplace(label, defect_material()); break;
        }
    }
    return map;
}

DirichletBc CableScenario::x_linear(const Mesh& mesh, double v0) const {
    const double r = outer_radius;
    return boundary_dirichlet(mesh, [v0, r](Point2 p) { return v0 * p.x / r; }, {0});
}

}  // namespace qlert
