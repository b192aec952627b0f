#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <vector>

#include "qlert/materials.hpp"
#include "qlert/mesh.hpp"
#include "qlert/sparse.hpp"

namespace qlert {

// Nodes with prescribed potential.
struct DirichletBc {
    std::vector<int> nodes;
    std::vector<double> values;  // one per node
};

// Inclusion replacement for the limiting problems: PEC regions collapse to one
// floating potential per connected component, PEI regions are removed from the
// domain (natural no-flux condition on their boundary).
struct LimitTreatment {
    std::set<int> pec_regions;
    std::set<int> pei_regions;
};

enum class DofKind : unsigned char { free, fixed, merged, inactive };

// Node -> unknown. Merged nodes point straight at their master's unknown.
struct DofMap {
    std::vector<DofKind> kind;
    std::vector<int> index;         // unknown index for free and merged nodes, -1 otherwise
    std::vector<int> master;        // master node for merged nodes (self for free masters), -1 otherwise
    std::vector<int> pec_masters;   // one master node per PEC component
    std::size_t unknowns = 0;
};

struct StiffnessSystem {
    CsrMatrix matrix;
    std::vector<double> rhs;
    const DofMap* dof_map = nullptr;
};

// Exact P1 gradient of a nodal field on each element; NaN where any vertex is NaN.
std::vector<Point2> element_gradients(const Mesh& mesh, std::span<const double> u);

// Precomputes the degree-of-freedom map and sparsity pattern for one mesh,
// Dirichlet node set and limit treatment. Conductivities and prescribed values
// may change between assemblies.
class Assembler {
public:
    Assembler(const Mesh& mesh, std::vector<int> dirichlet_nodes, LimitTreatment treatment = {});

    const Mesh& mesh() const noexcept { return *mesh_; }
    const DofMap& dof_map() const noexcept { return dofs_; }
    const std::vector<int>& dirichlet_nodes() const noexcept { return dirichlet_nodes_; }
    const LimitTreatment& treatment() const noexcept { return treatment_; }

    // Elements that carry stiffness (not PEC, not PEI).
    bool element_active(std::size_t e) const { return active_[e] != 0; }

    // Stiffness with per-element conductivity; `dirichlet_values` matches
    // dirichlet_nodes(). Throws InvalidArgument for non-positive conductivity.
    StiffnessSystem assemble(std::span<const double> sigma, std::span<const double> dirichlet_values) const;

    // Nodal field from the unknowns: Dirichlet values on fixed nodes, shared
    // master values on PEC nodes, NaN on inactive nodes.
    std::vector<double> expand(std::span<const double> unknowns, std::span<const double> dirichlet_values) const;

    // Unknown vector sampled from a nodal field (e.g. a warm start).
    std::vector<double> restrict_to_unknowns(std::span<const double> nodal) const;

    // Net current injected at each node, (K u)_i over active elements. Zero at
    // free nodes of a converged solution; sums over electrodes give currents.
    std::vector<double> nodal_currents(std::span<const double> sigma, std::span<const double> nodal) const;

    // Unknowns touched by active elements of each listed region, one disjoint
    // group per region (a node shared by two regions goes to the first).
    std::vector<std::vector<int>> region_unknown_groups(const std::set<int>& labels) const;

    // Element-local stiffness of element e for unit conductivity.
    std::array<std::array<double, 3>, 3> local_stiffness(std::size_t e) const;

private:
    const Mesh* mesh_;
    std::vector<int> dirichlet_nodes_;
    LimitTreatment treatment_;
    DofMap dofs_;
    std::vector<char> active_;
    std::vector<double> area_;
    std::vector<std::array<Point2, 3>> grad_phi_;  // basis gradients per element
    CsrMatrix pattern_;
    std::vector<std::array<long, 9>> slot_;  // CSR slot of each local entry, -1 if not an unknown pair
    std::vector<int> fixed_slot_;            // node -> position in dirichlet_nodes_, -1 otherwise
};

// Sum over elements of area * Q(|grad u|) with each element's model. Elements
// with NaN gradients (removed regions) are skipped; PEC regions contribute 0.
double dirichlet_energy(const Mesh& mesh, const MaterialMap& materials, std::span<const double> u);

// Integral of a P1 field squared over the flagged elements (all when mask empty).
double l2_norm_squared(const Mesh& mesh, std::span<const double> u, std::span<const char> mask = {});

// Integral of (u - v)^2 over the flagged elements.
double l2_distance_squared(const Mesh& mesh, std::span<const double> u, std::span<const double> v,
                           std::span<const char> mask = {});

// Field direction on the elements just outside a set of regions: for each
// element not in `regions` sharing an edge with one that is, the ratio of the
// field component along that edge to the field magnitude. Elements with zero
// field are skipped.
struct InterfaceField {
    std::vector<std::size_t> elements;
    std::vector<double> tangential_ratio;
    double max_ratio = 0.0;
    double mean_ratio = 0.0;
};

InterfaceField interface_tangential_ratio(const Mesh& mesh, std::span<const Point2> gradients,
                                          const std::set<int>& regions);

}  // namespace qlert
