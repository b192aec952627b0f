#include "qlert/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "parallel.hpp"
#include "qlert/error.hpp"
#include "qlert/fem.hpp"
#include "qlert/mesh_io.hpp"

namespace qlert {

ConductanceMatrix conductance_matrix(const Mesh& mesh, const MaterialMap& materials, const ConductanceOptions& options) {
    const int n = mesh.electrode_count();
    if (n < 2) throw InvalidArgument("conductance_matrix: mesh needs at least two electrodes");
    if (!(options.amplitude > 0.0) || !std::isfinite(options.amplitude))
        throw InvalidArgument("conductance_matrix: amplitude must be positive");
    options.solver.validate();

    LimitTreatment treatment;
    if (options.model == ForwardModel::pec_limit) {
        treatment.pec_regions = options.pec_regions;
        if (treatment.pec_regions.empty()) {
            for (const auto& [label, info] : mesh.region_table()) {
                if (info.kind == RegionKind::inclusion) treatment.pec_regions.insert(label);
            }
        }
    }
    const std::vector<double> zeros(static_cast<std::size_t>(n), 0.0);
    const DirichletBc layout = electrode_dirichlet(mesh, zeros);
    const Assembler assembler(mesh, layout.nodes, treatment);
    std::vector<std::vector<int>> electrode_nodes;
    for (int k = 0; k < n; ++k) electrode_nodes.push_back(mesh.electrode_nodes(k));

    const auto un = static_cast<std::size_t>(n);
    DenseMatrix raw(un, un);
    std::vector<long> iterations(un, 0);
    detail::parallel_for(un, options.threads, [&](std::size_t j) {
        std::vector<double> pattern(un, -options.amplitude / n);
        pattern[j] += options.amplitude;
        const DirichletBc bc = electrode_dirichlet(mesh, pattern);
        FieldSolution sol;
        try {
            sol = solve_nonlinear(assembler, materials, bc, options.solver);
        } catch (const NonConvergence& err) {
            throw NonConvergence("pattern " + std::to_string(j) + ": " + err.what(), err.history());
        } catch (const NumericalBreakdown& err) {
            throw NumericalBreakdown("pattern " + std::to_string(j) + ": " + err.what(), err.element());
        }
        iterations[j] = sol.iterations;
        const auto currents = assembler.nodal_currents(sol.element_sigma, sol.nodal_potential);
        for (std::size_t i = 0; i < un; ++i) {
            double s = 0.0;
            for (int v : electrode_nodes[i]) s += currents[static_cast<std::size_t>(v)];
            raw(i, j) = s / options.amplitude;
        }
    });

    ConductanceMatrix out;
    const double scale = raw.max_abs();
    out.asymmetry = scale > 0.0 ? raw.asymmetry() / scale : 0.0;
    out.g = raw.symmetric_part();
    out.amplitude = options.amplitude;
    out.mesh_id = mesh_fingerprint(mesh);
    out.scenario_id = options.scenario_id;
    for (long it : iterations) out.picard_iterations += it;
    return out;
}

PsdCheck is_psd(const DenseMatrix& m, double tol, double symmetry_tol) {
    if (!m.square()) throw InvalidArgument("is_psd: matrix is not square");
    const double scale = m.max_abs();
    if (m.asymmetry() > symmetry_tol * scale) {
        std::ostringstream msg;
        msg << "is_psd: matrix is not symmetric (asymmetry " << m.asymmetry() << ", scale " << scale << ")";
        throw InvalidArgument(msg.str());
    }
    PsdCheck out;
    if (m.rows() == 0) {
        out.psd = true;
        out.min_eigenvalue = std::numeric_limits<double>::infinity();
        return out;
    }
    out.min_eigenvalue = jacobi_eigen(m).values.front();
    out.psd = out.min_eigenvalue >= -tol;
    return out;
}

DenseMatrix deflate_constant(const DenseMatrix& m) {
    if (!m.square()) throw InvalidArgument("deflate_constant: matrix is not square");
    const DenseMatrix q = zero_mean_basis(m.rows());
    return q.transposed() * m * q;
}

DenseMatrix goe_noise(std::size_t size, double eta, double dg_max, std::uint64_t seed) {
    if (size < 1) throw InvalidArgument("goe_noise: size must be at least 1");
    if (!(eta >= 0.0)) throw InvalidArgument("goe_noise: eta must be nonnegative");
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    DenseMatrix a(size, size);
    for (std::size_t i = 0; i < size; ++i) {
        for (std::size_t j = i; j < size; ++j) {
            const double z = normal(gen);
            a(i, j) = a(j, i) = i == j ? std::sqrt(2.0) * z : z;
        }
    }
    a *= eta * dg_max;
    return a;
}

double max_abs_difference(const DenseMatrix& a, const DenseMatrix& b) { return (a - b).max_abs(); }

ElementMask disc_mask(const Mesh& mesh, Point2 center, double radius) {
    ElementMask mask(mesh.element_count(), 0);
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        if (mesh.region(e) == kMatrixRegion && distance(mesh.centroid(e), center) < radius) mask[e] = 1;
    }
    return mask;
}

std::vector<TestDomain> disc_test_domains(const Mesh& mesh, std::span<const double> radii, double spacing) {
    if (!(spacing > 0.0)) throw InvalidArgument("disc_test_domains: spacing must be positive");
    if (radii.empty()) throw InvalidArgument("disc_test_domains: no radii given");
    double outer = 0.0;
    for (const auto& p : mesh.nodes()) outer = std::max(outer, norm(p));
    const int reach = static_cast<int>(std::floor(outer / spacing));
    std::vector<TestDomain> out;
    for (double r : radii) {
        if (!(r > 0.0)) throw InvalidArgument("disc_test_domains: radii must be positive");
        for (int j = -reach; j <= reach; ++j) {
            for (int i = -reach; i <= reach; ++i) {
                const Point2 c{i * spacing, j * spacing};
                if (norm(c) + r > outer * (1.0 + 1e-12)) continue;
                TestDomain t;
                t.center = c;
                t.radius = r;
                t.mask = disc_mask(mesh, c, r);
                if (std::find(t.mask.begin(), t.mask.end(), 1) == t.mask.end()) continue;
                t.id = static_cast<int>(out.size());
                out.push_back(std::move(t));
            }
        }
    }
    return out;
}

Mesh with_defect(const Mesh& mesh, const ElementMask& mask, int index) {
    if (index < 1) throw InvalidArgument("with_defect: defect index must be positive");
    if (mask.size() != mesh.element_count()) throw InvalidArgument("with_defect: mask size does not match mesh");
    ElementMask m(mask.size(), 0);
    for (std::size_t e = 0; e < mask.size(); ++e) m[e] = mask[e] && mesh.region(e) == kMatrixRegion;
    return mesh.relabeled(m, -index);
}

std::vector<ConductanceMatrix> test_domain_matrices(const Mesh& mesh, std::span<const TestDomain> domains,
                                                    const MaterialModel& background, const MaterialModel& defect,
                                                    const ConductanceOptions& options) {
    ConductanceOptions inner = options;
    inner.model = ForwardModel::pec_limit;
    inner.threads = 1;
    std::vector<ConductanceMatrix> out(domains.size());
    detail::parallel_for(domains.size(), options.threads, [&](std::size_t k) {
        const Mesh m = with_defect(mesh, domains[k].mask, 1);
        MaterialMap materials{{kMatrixRegion, background}, {-1, defect}};
        ConductanceOptions o = inner;
        o.scenario_id = "test-domain-" + std::to_string(domains[k].id);
        out[k] = conductance_matrix(m, materials, o);
    });
    return out;
}

Reconstruction mpm_reconstruct(const DenseMatrix& g_measured, std::span<const DenseMatrix> test_matrices,
                               std::span<const ElementMask> test_masks, double delta, double tol) {
    if (test_matrices.size() != test_masks.size())
        throw InvalidArgument("mpm_reconstruct: one mask per test matrix required");
    if (!g_measured.square()) throw InvalidArgument("mpm_reconstruct: measured matrix is not square");
    if (!(delta >= 0.0)) throw InvalidArgument("mpm_reconstruct: delta must be nonnegative");
    if (!(tol >= 0.0)) throw InvalidArgument("mpm_reconstruct: tolerance must be nonnegative");
    const std::size_t n = g_measured.rows();
    const std::size_t n_elem = test_masks.empty() ? 0 : test_masks.front().size();
    for (std::size_t k = 0; k < test_matrices.size(); ++k) {
        if (test_matrices[k].rows() != n || test_matrices[k].cols() != n)
            throw InvalidArgument("mpm_reconstruct: test matrix " + std::to_string(k) + " has the wrong size");
        if (test_masks[k].size() != n_elem)
            throw InvalidArgument("mpm_reconstruct: test mask " + std::to_string(k) + " has the wrong size");
    }

    Reconstruction out;
    out.delta = delta;
    out.union_mask.assign(n_elem, 0);
    const double inf = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < test_matrices.size(); ++k) {
        double lo = inf, lo_full = inf;
        if (std::isfinite(delta)) {
            DenseMatrix m = test_matrices[k] - g_measured;
            m = m.symmetric_part();
            for (std::size_t i = 0; i < n; ++i) m(i, i) += delta;
            lo = is_psd(deflate_constant(m), tol).min_eigenvalue;
            lo_full = is_psd(m, tol).min_eigenvalue;
        }
        out.min_eigenvalue.push_back(lo);
        out.min_eigenvalue_full.push_back(lo_full);
        if (lo >= -tol) {
            out.accepted.push_back(static_cast<int>(k));
            for (std::size_t e = 0; e < n_elem; ++e) out.union_mask[e] |= test_masks[k][e];
        }
    }
    return out;
}

ReconstructionMetrics reconstruction_metrics(const Mesh& mesh, const ElementMask& truth, const ElementMask& estimate) {
    if (truth.size() != mesh.element_count() || estimate.size() != mesh.element_count())
        throw InvalidArgument("reconstruction_metrics: mask size does not match mesh");
    double v = 0.0, both = 0.0, extra = 0.0;
    bool inside = true;
    for (std::size_t e = 0; e < truth.size(); ++e) {
        const double a = mesh.element_area(e);
        if (truth[e]) {
            v += a;
            if (estimate[e]) both += a;
            else inside = false;
        } else if (estimate[e]) {
            extra += a;
        }
    }
    ReconstructionMetrics m;
    m.upper_bound = inside;
    if (v > 0.0) {
        m.coverage = both / v;
        m.excess = extra / v;
    }
    return m;
}

}  // namespace qlert
