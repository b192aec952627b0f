#include "qlert/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "qlert/error.hpp"

namespace qlert {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t i) {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }

    // The smaller root survives, so each set is represented by its minimum.
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
    }

private:
    std::vector<std::size_t> parent_;
};

}  // namespace

std::vector<Point2> element_gradients(const Mesh& mesh, std::span<const double> u) {
    if (u.size() != mesh.node_count()) throw InvalidArgument("element_gradients: field size does not match mesh");
    std::vector<Point2> out(mesh.element_count());
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const auto& t = mesh.element(e);
        Point2 p[3] = {mesh.node(t[0]), mesh.node(t[1]), mesh.node(t[2])};
        double v[3] = {u[static_cast<std::size_t>(t[0])], u[static_cast<std::size_t>(t[1])],
                       u[static_cast<std::size_t>(t[2])]};
        if (v[0] == v[1] && v[1] == v[2]) {
            out[e] = {0.0, 0.0};
            continue;
        }
        const double two_a = orient2d(p[0], p[1], p[2]);
        // Differences against vertex 0 avoid cancellation when the field is a
        // large offset plus a tiny variation.
        Point2 g{0.0, 0.0};
        for (int i = 1; i < 3; ++i) {
            const Point2& pj = p[(i + 1) % 3];
            const Point2& pk = p[(i + 2) % 3];
            g = g + (v[i] - v[0]) * Point2{pj.y - pk.y, pk.x - pj.x};
        }
        out[e] = (1.0 / two_a) * g;
    }
    return out;
}

Assembler::Assembler(const Mesh& mesh, std::vector<int> dirichlet_nodes, LimitTreatment treatment)
    : mesh_(&mesh), dirichlet_nodes_(std::move(dirichlet_nodes)), treatment_(std::move(treatment)) {
    const std::size_t n_nodes = mesh.node_count();
    const std::size_t n_elem = mesh.element_count();
    if (dirichlet_nodes_.empty()) throw InvalidArgument("assemble: Dirichlet node set is empty");
    for (int r : treatment_.pec_regions) {
        if (treatment_.pei_regions.contains(r))
            throw InvalidArgument("region " + std::to_string(r) + " is marked both PEC and PEI");
    }

    fixed_slot_.assign(n_nodes, -1);
    for (std::size_t i = 0; i < dirichlet_nodes_.size(); ++i) {
        int v = dirichlet_nodes_[i];
        if (v < 0 || static_cast<std::size_t>(v) >= n_nodes)
            throw InvalidArgument("Dirichlet node " + std::to_string(v) + " out of range");
        if (fixed_slot_[static_cast<std::size_t>(v)] != -1)
            throw InvalidArgument("Dirichlet node " + std::to_string(v) + " listed twice");
        fixed_slot_[static_cast<std::size_t>(v)] = static_cast<int>(i);
    }

    active_.assign(n_elem, 1);
    std::vector<char> in_pec(n_nodes, 0), touched(n_nodes, 0);
    UnionFind pec(n_nodes);
    for (std::size_t e = 0; e < n_elem; ++e) {
        const int label = mesh.region(e);
        const auto& t = mesh.element(e);
        if (treatment_.pec_regions.contains(label)) {
            active_[e] = 0;
            for (int v : t) in_pec[static_cast<std::size_t>(v)] = 1;
            pec.unite(static_cast<std::size_t>(t[0]), static_cast<std::size_t>(t[1]));
            pec.unite(static_cast<std::size_t>(t[0]), static_cast<std::size_t>(t[2]));
        } else if (treatment_.pei_regions.contains(label)) {
            active_[e] = 0;
        } else {
            for (int v : t) touched[static_cast<std::size_t>(v)] = 1;
        }
    }

    dofs_.kind.assign(n_nodes, DofKind::inactive);
    dofs_.index.assign(n_nodes, -1);
    dofs_.master.assign(n_nodes, -1);
    int next = 0;
    for (std::size_t v = 0; v < n_nodes; ++v) {
        if (in_pec[v]) {
            if (fixed_slot_[v] != -1)
                throw ConflictError("perfectly conducting region touches the Dirichlet boundary at node " +
                                    std::to_string(v));
            const auto root = pec.find(v);
            dofs_.master[v] = static_cast<int>(root);
            if (root == v) {
                dofs_.kind[v] = DofKind::free;
                dofs_.index[v] = next++;
                dofs_.pec_masters.push_back(static_cast<int>(v));
            } else {
                dofs_.kind[v] = DofKind::merged;
                dofs_.index[v] = dofs_.index[root];
            }
        } else if (fixed_slot_[v] != -1) {
            dofs_.kind[v] = DofKind::fixed;
        } else if (touched[v]) {
            dofs_.kind[v] = DofKind::free;
            dofs_.index[v] = next++;
            dofs_.master[v] = static_cast<int>(v);
        }
    }
    dofs_.unknowns = static_cast<std::size_t>(next);

    // Every unknown must be coupled to a prescribed value through active elements.
    UnionFind reach(dofs_.unknowns + 1);
    const std::size_t ground = dofs_.unknowns;
    auto id_of = [&](int v) -> std::size_t {
        int idx = dofs_.index[static_cast<std::size_t>(v)];
        return idx >= 0 ? static_cast<std::size_t>(idx) : ground;
    };
    for (std::size_t e = 0; e < n_elem; ++e) {
        if (!active_[e]) continue;
        const auto& t = mesh.element(e);
        reach.unite(id_of(t[0]), id_of(t[1]));
        reach.unite(id_of(t[0]), id_of(t[2]));
    }
    const auto ground_root = reach.find(ground);
    for (std::size_t v = 0; v < n_nodes; ++v) {
        int idx = dofs_.index[v];
        if (idx >= 0 && reach.find(static_cast<std::size_t>(idx)) != ground_root)
            throw SingularSystem("node " + std::to_string(v) + " is not connected to any Dirichlet node");
    }

    area_.resize(n_elem);
    grad_phi_.resize(n_elem);
    for (std::size_t e = 0; e < n_elem; ++e) {
        const auto& t = mesh.element(e);
        Point2 p[3] = {mesh.node(t[0]), mesh.node(t[1]), mesh.node(t[2])};
        const double two_a = orient2d(p[0], p[1], p[2]);
        area_[e] = 0.5 * two_a;
        for (int i = 0; i < 3; ++i) {
            const Point2& pj = p[(i + 1) % 3];
            const Point2& pk = p[(i + 2) % 3];
            grad_phi_[e][static_cast<std::size_t>(i)] = (1.0 / two_a) * Point2{pj.y - pk.y, pk.x - pj.x};
        }
    }

    std::vector<int> rows, cols;
    std::vector<double> zeros;
    for (std::size_t e = 0; e < n_elem; ++e) {
        if (!active_[e]) continue;
        for (int a : mesh.element(e)) {
            for (int b : mesh.element(e)) {
                int ia = dofs_.index[static_cast<std::size_t>(a)];
                int ib = dofs_.index[static_cast<std::size_t>(b)];
                if (ia < 0 || ib < 0) continue;
                rows.push_back(ia);
                cols.push_back(ib);
                zeros.push_back(0.0);
            }
        }
    }
    pattern_ = CsrMatrix::from_triplets(dofs_.unknowns, rows, cols, zeros);

    slot_.assign(n_elem, {});
    for (std::size_t e = 0; e < n_elem; ++e) {
        slot_[e].fill(-1);
        if (!active_[e]) continue;
        const auto& t = mesh.element(e);
        for (std::size_t i = 0; i < 3; ++i) {
            int ia = dofs_.index[static_cast<std::size_t>(t[i])];
            if (ia < 0) continue;
            for (std::size_t j = 0; j < 3; ++j) {
                int ib = dofs_.index[static_cast<std::size_t>(t[j])];
                if (ib < 0) continue;
                auto first = pattern_.col.begin() + static_cast<long>(pattern_.row_ptr[static_cast<std::size_t>(ia)]);
                auto last = pattern_.col.begin() + static_cast<long>(pattern_.row_ptr[static_cast<std::size_t>(ia) + 1]);
                slot_[e][i * 3 + j] = std::lower_bound(first, last, ib) - pattern_.col.begin();
            }
        }
    }
}

std::vector<std::vector<int>> Assembler::region_unknown_groups(const std::set<int>& labels) const {
    std::vector<std::vector<int>> groups;
    std::vector<char> taken(dofs_.unknowns, 0);
    for (int label : labels) {
        std::vector<int> g;
        for (std::size_t e = 0; e < mesh_->element_count(); ++e) {
            if (!active_[e] || mesh_->region(e) != label) continue;
            for (int v : mesh_->element(e)) {
                const int idx = dofs_.index[static_cast<std::size_t>(v)];
                if (idx < 0 || taken[static_cast<std::size_t>(idx)]) continue;
                taken[static_cast<std::size_t>(idx)] = 1;
                g.push_back(idx);
            }
        }
        if (!g.empty()) groups.push_back(std::move(g));
    }
    return groups;
}

std::array<std::array<double, 3>, 3> Assembler::local_stiffness(std::size_t e) const {
    std::array<std::array<double, 3>, 3> k{};
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) k[i][j] = area_[e] * dot(grad_phi_[e][i], grad_phi_[e][j]);
    }
    return k;
}

StiffnessSystem Assembler::assemble(std::span<const double> sigma, std::span<const double> dirichlet_values) const {
    const Mesh& mesh = *mesh_;
    if (sigma.size() != mesh.element_count()) throw InvalidArgument("assemble: one conductivity per element required");
    if (dirichlet_values.size() != dirichlet_nodes_.size())
        throw InvalidArgument("assemble: one Dirichlet value per Dirichlet node required");

    StiffnessSystem sys;
    sys.matrix = pattern_;
    sys.rhs.assign(dofs_.unknowns, 0.0);
    sys.matrix.row_sum.assign(dofs_.unknowns, 0.0);
    sys.dof_map = &dofs_;
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        if (!active_[e]) continue;
        const double s = sigma[e];
        if (!(s > 0.0) || !std::isfinite(s))
            throw InvalidArgument("assemble: conductivity of element " + std::to_string(e) + " is not positive");
        const auto& t = mesh.element(e);
        for (std::size_t i = 0; i < 3; ++i) {
            const int ia = dofs_.index[static_cast<std::size_t>(t[i])];
            if (ia < 0) continue;
            for (std::size_t j = 0; j < 3; ++j) {
                const double kij = s * area_[e] * dot(grad_phi_[e][i], grad_phi_[e][j]);
                const long slot = slot_[e][i * 3 + j];
                if (slot >= 0) {
                    sys.matrix.val[static_cast<std::size_t>(slot)] += kij;
                } else {
                    const int fixed = fixed_slot_[static_cast<std::size_t>(t[j])];
                    sys.rhs[static_cast<std::size_t>(ia)] -= kij * dirichlet_values[static_cast<std::size_t>(fixed)];
                    sys.matrix.row_sum[static_cast<std::size_t>(ia)] -= kij;
                }
            }
        }
    }
    return sys;
}

std::vector<double> Assembler::expand(std::span<const double> unknowns, std::span<const double> dirichlet_values) const {
    if (unknowns.size() != dofs_.unknowns) throw InvalidArgument("expand: unknown vector has wrong size");
    std::vector<double> u(mesh_->node_count(), kNaN);
    for (std::size_t v = 0; v < u.size(); ++v) {
        if (dofs_.index[v] >= 0) {
            u[v] = unknowns[static_cast<std::size_t>(dofs_.index[v])];
        } else if (dofs_.kind[v] == DofKind::fixed) {
            u[v] = dirichlet_values[static_cast<std::size_t>(fixed_slot_[v])];
        }
    }
    return u;
}

std::vector<double> Assembler::restrict_to_unknowns(std::span<const double> nodal) const {
    if (nodal.size() != mesh_->node_count()) throw InvalidArgument("restrict_to_unknowns: field size does not match mesh");
    std::vector<double> x(dofs_.unknowns, 0.0);
    for (std::size_t v = 0; v < nodal.size(); ++v) {
        if (dofs_.kind[v] == DofKind::free && std::isfinite(nodal[v])) x[static_cast<std::size_t>(dofs_.index[v])] = nodal[v];
    }
    return x;
}

std::vector<double> Assembler::nodal_currents(std::span<const double> sigma, std::span<const double> nodal) const {
    const Mesh& mesh = *mesh_;
    std::vector<double> r(mesh.node_count(), 0.0);
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        if (!active_[e]) continue;
        const auto& t = mesh.element(e);
        const double u0 = nodal[static_cast<std::size_t>(t[0])];
        Point2 g{0.0, 0.0};
        for (std::size_t j = 1; j < 3; ++j) g = g + (nodal[static_cast<std::size_t>(t[j])] - u0) * grad_phi_[e][j];
        for (std::size_t i = 0; i < 3; ++i)
            r[static_cast<std::size_t>(t[i])] += sigma[e] * area_[e] * dot(grad_phi_[e][i], g);
    }
    return r;
}

double dirichlet_energy(const Mesh& mesh, const MaterialMap& materials, std::span<const double> u) {
    const auto grads = element_gradients(mesh, u);
    double energy = 0.0;
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const double g = norm(grads[e]);
        if (std::isnan(g) || g == 0.0) continue;
        auto it = materials.find(mesh.region(e));
        if (it == materials.end())
            throw InvalidArgument("no material for region " + std::to_string(mesh.region(e)));
        energy += mesh.element_area(e) * it->second.energy_density(g);
    }
    return energy;
}

double l2_distance_squared(const Mesh& mesh, std::span<const double> u, std::span<const double> v,
                           std::span<const char> mask) {
    if (u.size() != mesh.node_count() || (!v.empty() && v.size() != mesh.node_count()))
        throw InvalidArgument("l2 norm: field size does not match mesh");
    if (!mask.empty() && mask.size() != mesh.element_count()) throw InvalidArgument("l2 norm: mask size mismatch");
    double total = 0.0;
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        if (!mask.empty() && !mask[e]) continue;
        const auto& t = mesh.element(e);
        double d[3];
        for (std::size_t i = 0; i < 3; ++i) {
            const auto k = static_cast<std::size_t>(t[i]);
            d[i] = u[k] - (v.empty() ? 0.0 : v[k]);
        }
        total += mesh.element_area(e) / 6.0 *
                 (d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[0] * d[1] + d[1] * d[2] + d[2] * d[0]);
    }
    return total;
}

double l2_norm_squared(const Mesh& mesh, std::span<const double> u, std::span<const char> mask) {
    return l2_distance_squared(mesh, u, {}, mask);
}

InterfaceField interface_tangential_ratio(const Mesh& mesh, std::span<const Point2> gradients,
                                          const std::set<int>& regions) {
    if (gradients.size() != mesh.element_count())
        throw InvalidArgument("interface_tangential_ratio: one gradient per element required");
    std::map<std::pair<int, int>, std::vector<std::size_t>> edge_elements;
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const auto& t = mesh.element(e);
        for (int i = 0; i < 3; ++i) {
            const int a = t[static_cast<std::size_t>(i)], b = t[static_cast<std::size_t>((i + 1) % 3)];
            edge_elements[{std::min(a, b), std::max(a, b)}].push_back(e);
        }
    }
    // Largest ratio per outside element over its interface edges.
    std::map<std::size_t, double> worst;
    for (const auto& [edge, elems] : edge_elements) {
        if (elems.size() != 2) continue;
        const bool in0 = regions.contains(mesh.region(elems[0]));
        const bool in1 = regions.contains(mesh.region(elems[1]));
        if (in0 == in1) continue;
        const std::size_t outside = in0 ? elems[1] : elems[0];
        const Point2 g = gradients[outside];
        const double mag = norm(g);
        if (!(mag > 0.0) || !std::isfinite(mag)) continue;
        const Point2 d = mesh.node(edge.second) - mesh.node(edge.first);
        const double ratio = std::abs(dot(g, d)) / (norm(d) * mag);
        auto [it, fresh] = worst.emplace(outside, ratio);
        if (!fresh) it->second = std::max(it->second, ratio);
    }
    InterfaceField out;
    double sum = 0.0;
    for (const auto& [e, r] : worst) {
        out.elements.push_back(e);
        out.tangential_ratio.push_back(r);
        out.max_ratio = std::max(out.max_ratio, r);
        sum += r;
    }
    if (!worst.empty()) out.mean_ratio = sum / static_cast<double>(worst.size());
    return out;
}

}  // namespace qlert
