#include "qlert/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>

#include "qlert/error.hpp"

namespace qlert {

namespace {

std::atomic<long> g_violations{0};

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) {
        if (std::isfinite(x)) m = std::max(m, std::abs(x));
    }
    return m;
}

double auto_damping(const std::vector<const MaterialModel*>& models) {
    for (const auto* m : models) {
        if (!m) continue;
        if (const auto* ej = std::get_if<PowerLawEJ>(&m->law()); ej && ej->n >= 10.0) return 0.7;
    }
    return 1.0;
}

double domain_diameter(const Mesh& mesh) {
    double xmin = std::numeric_limits<double>::infinity(), ymin = xmin, xmax = -xmin, ymax = -xmin;
    for (const auto& p : mesh.nodes()) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    return std::hypot(xmax - xmin, ymax - ymin);
}

MaterialMap uniform_materials(const Mesh& mesh, const MaterialModel& model, const std::set<int>& skip) {
    MaterialMap map;
    for (const auto& [label, info] : mesh.region_table()) {
        if (!skip.contains(label)) map.emplace(label, model);
    }
    return map;
}

}  // namespace

void NonlinearSolveConfig::validate() const {
    if (max_picard_iter < 1) throw InvalidArgument("max_picard_iter must be at least 1");
    if (!(picard_tol > 0.0)) throw InvalidArgument("picard_tol must be positive");
    if (!(linear_tol > 0.0)) throw InvalidArgument("linear_tol must be positive");
    if (damping && !(*damping > 0.0 && *damping <= 1.0)) throw InvalidArgument("damping must lie in (0, 1]");
}

long solver_violation_count() { return g_violations.load(); }
void reset_solver_violation_count() { g_violations.store(0); }

DirichletBc boundary_dirichlet(const Mesh& mesh, const std::function<double(Point2)>& f, std::vector<int> loops) {
    if (loops.empty()) {
        for (std::size_t l = 0; l < mesh.loop_count(); ++l) loops.push_back(static_cast<int>(l));
    }
    std::vector<int> nodes;
    for (int l : loops) {
        if (l < 0 || static_cast<std::size_t>(l) >= mesh.loop_count())
            throw InvalidArgument("boundary loop " + std::to_string(l) + " does not exist");
        auto ln = mesh.loop_nodes(static_cast<std::size_t>(l));
        nodes.insert(nodes.end(), ln.begin(), ln.end());
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    DirichletBc bc;
    bc.nodes = nodes;
    for (int v : nodes) bc.values.push_back(f(mesh.node(v)));
    return bc;
}

DirichletBc electrode_dirichlet(const Mesh& mesh, std::span<const double> values) {
    if (static_cast<int>(values.size()) != mesh.electrode_count())
        throw InvalidArgument("electrode_dirichlet: one value per electrode required");
    DirichletBc bc;
    for (int k = 0; k < mesh.electrode_count(); ++k) {
        for (int v : mesh.electrode_nodes(k)) {
            bc.nodes.push_back(v);
            bc.values.push_back(values[static_cast<std::size_t>(k)]);
        }
    }
    return bc;
}

FieldSolution solve_nonlinear(const Mesh& mesh, const MaterialMap& materials, const DirichletBc& bc,
                              const NonlinearSolveConfig& config, const LimitTreatment& treatment) {
    Assembler assembler(mesh, bc.nodes, treatment);
    return solve_nonlinear(assembler, materials, bc, config);
}

FieldSolution solve_nonlinear(const Assembler& assembler, const MaterialMap& materials, const DirichletBc& bc,
                              const NonlinearSolveConfig& config) {
    config.validate();
    const Mesh& mesh = assembler.mesh();
    if (bc.nodes != assembler.dirichlet_nodes() || bc.values.size() != bc.nodes.size())
        throw InvalidArgument("solve_nonlinear: boundary data does not match the assembler's Dirichlet nodes");
    for (double v : bc.values) {
        if (!std::isfinite(v)) throw InvalidArgument("solve_nonlinear: boundary data is not finite");
    }

    const std::size_t n_elem = mesh.element_count();
    std::vector<const MaterialModel*> model(n_elem, nullptr);
    bool field_dependent = false;
    bool descent_guaranteed = true;
    for (std::size_t e = 0; e < n_elem; ++e) {
        if (!assembler.element_active(e)) continue;
        auto it = materials.find(mesh.region(e));
        if (it == materials.end())
            throw InvalidArgument("no material for region " + std::to_string(mesh.region(e)));
        model[e] = &it->second;
        field_dependent = field_dependent || it->second.field_dependent();
        descent_guaranteed = descent_guaranteed && it->second.sigma_nonincreasing();
    }

    FieldSolution sol;
    sol.damping = config.damping.value_or(auto_damping(model));
    CgOptions cg{config.linear_tol, config.linear_max_iter, {}};
    {
        // Coarse correction on inclusions: their conductivity may exceed the
        // matrix by many orders of magnitude.
        std::set<int> inclusions;
        for (std::size_t e = 0; e < n_elem; ++e) {
            if (model[e] && mesh.region(e) > 0) inclusions.insert(mesh.region(e));
        }
        cg.coarse_groups = assembler.region_unknown_groups(inclusions);
    }

    std::vector<double> sigma(n_elem, 0.0);
    auto sigma_from = [&](const std::vector<double>& nodal) {
        const auto grads = element_gradients(mesh, nodal);
        for (std::size_t e = 0; e < n_elem; ++e) {
            if (!model[e]) continue;
            const double g = norm(grads[e]);
            if (!std::isfinite(g))
                throw NumericalBreakdown("non-finite field in element " + std::to_string(e), static_cast<long>(e));
            sigma[e] = model[e]->sigma(g);
            if (!std::isfinite(sigma[e]) || !(sigma[e] > 0.0))
                throw NumericalBreakdown("invalid conductivity in element " + std::to_string(e), static_cast<long>(e));
        }
    };
    auto linear_solve = [&](std::vector<double>& x) {
        auto sys = assembler.assemble(sigma, bc.values);
        auto res = solve_cg(sys.matrix, sys.rhs, x, cg);
        sol.linear_iterations += res.iterations;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!std::isfinite(x[i])) throw NumericalBreakdown("linear solve produced non-finite values", -1);
        }
    };

    const double bc_scale = max_abs(bc.values);
    std::vector<double> x(assembler.dof_map().unknowns, 0.0);
    std::vector<double> nodal;

    if (!field_dependent) {
        for (std::size_t e = 0; e < n_elem; ++e) {
            if (model[e]) sigma[e] = model[e]->sigma(0.0);
        }
        linear_solve(x);
        nodal = assembler.expand(x, bc.values);
        sol.iterations = 1;
        sol.residuals.push_back(0.0);
        sol.energy = dirichlet_energy(mesh, materials, nodal);
        sol.energy_history.push_back(sol.energy);
    } else {
        switch (config.initial) {
            case InitialGuess::zero:
                break;
            case InitialGuess::linear: {
                double lo = *std::min_element(bc.values.begin(), bc.values.end());
                double hi = *std::max_element(bc.values.begin(), bc.values.end());
                const double e_char = (hi - lo) / domain_diameter(mesh);
                for (std::size_t e = 0; e < n_elem; ++e) {
                    if (model[e]) sigma[e] = model[e]->sigma(e_char);
                }
                linear_solve(x);
                break;
            }
            case InitialGuess::provided:
                if (config.initial_field.size() != mesh.node_count())
                    throw InvalidArgument("provided initial field has the wrong size");
                x = assembler.restrict_to_unknowns(config.initial_field);
                break;
        }
        nodal = assembler.expand(x, bc.values);
        double energy = dirichlet_energy(mesh, materials, nodal);
        sol.energy_history.push_back(energy);

        bool converged = false;
        std::vector<double> x_new;
        for (int k = 1; k <= config.max_picard_iter; ++k) {
            sigma_from(nodal);
            x_new = x;
            linear_solve(x_new);
            double change = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double next = (1.0 - sol.damping) * x[i] + sol.damping * x_new[i];
                change = std::max(change, std::abs(next - x[i]));
                x[i] = next;
            }
            nodal = assembler.expand(x, bc.values);
            const double scale = std::max({max_abs(x), bc_scale, std::numeric_limits<double>::min()});
            change /= scale;
            sol.residuals.push_back(change);
            sol.iterations = k;

            const double next_energy = dirichlet_energy(mesh, materials, nodal);
            if (next_energy > energy + config.picard_tol * std::abs(energy)) {
                std::ostringstream msg;
                msg << "energy increased at Picard iteration " << k << ": " << energy << " -> " << next_energy;
                if (descent_guaranteed) {
                    sol.energy_descent_ok = false;
                    ++g_violations;
                }
                sol.warnings.push_back(msg.str());
            }
            energy = next_energy;
            sol.energy_history.push_back(energy);
            if (change <= config.picard_tol) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            std::ostringstream msg;
            msg << "Picard iteration did not converge in " << config.max_picard_iter << " iterations (last change "
                << sol.residuals.back() << ")";
            throw NonConvergence(msg.str(), sol.residuals);
        }
        sol.energy = energy;
        sigma_from(nodal);
    }

    // Discrete maximum principle against the prescribed values.
    {
        const double lo = *std::min_element(bc.values.begin(), bc.values.end());
        const double hi = *std::max_element(bc.values.begin(), bc.values.end());
        const double slack = 1e-6 * std::max(hi - lo, std::numeric_limits<double>::min());
        for (std::size_t v = 0; v < nodal.size(); ++v) {
            if (std::isnan(nodal[v])) continue;
            if (nodal[v] < lo - slack || nodal[v] > hi + slack) {
                sol.max_principle_ok = false;
                std::ostringstream msg;
                msg << "maximum principle violated at node " << v << ": " << nodal[v] << " outside [" << lo << ", "
                    << hi << "]";
                sol.warnings.push_back(msg.str());
                ++g_violations;
                break;
            }
        }
    }

    sol.element_gradient = element_gradients(mesh, nodal);
    sol.element_sigma = std::move(sigma);
    sol.nodal_potential = std::move(nodal);
    return sol;
}

FieldSolution solve_pec_limit(const Mesh& mesh, const MaterialModel& matrix_material, const std::set<int>& pec_regions,
                              const DirichletBc& bc, const NonlinearSolveConfig& config) {
    LimitTreatment t;
    t.pec_regions = pec_regions;
    return solve_nonlinear(mesh, uniform_materials(mesh, matrix_material, pec_regions), bc, config, t);
}

FieldSolution solve_pei_limit(const Mesh& mesh, const MaterialModel& matrix_material, const std::set<int>& pei_regions,
                              const DirichletBc& bc, const NonlinearSolveConfig& config) {
    LimitTreatment t;
    t.pei_regions = pei_regions;
    return solve_nonlinear(mesh, uniform_materials(mesh, matrix_material, pei_regions), bc, config, t);
}

std::vector<double> lambda_grid(double hi, double lo, int per_decade) {
    auto g = log_grid(lo, hi, per_decade);
    std::reverse(g.begin(), g.end());
    return g;
}

LambdaSweep lambda_sweep(const Mesh& mesh, const MaterialMap& materials, const DirichletBc& f,
                         std::span<const double> lambdas, LimitKind limit, double p0,
                         const NonlinearSolveConfig& config) {
    if (lambdas.empty()) throw InvalidArgument("lambda_sweep: empty lambda grid");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > 0.0)) throw InvalidArgument("lambda_sweep: lambdas must be positive");
        if (i > 0 && !(lambdas[i] < lambdas[i - 1]))
            throw InvalidArgument("lambda_sweep: lambda grid must be strictly decreasing");
    }
    if (!(p0 > 1.0)) throw InvalidArgument("lambda_sweep: p0 must exceed 1");

    LambdaSweep out;
    std::set<int> inclusions;
    for (const auto& [label, info] : mesh.region_table()) {
        if (label > 0) inclusions.insert(label);
    }

    // Limit problem: inclusions replaced, B carries the small-field p0 model.
    MaterialMap limit_materials;
    for (const auto& [label, info] : mesh.region_table()) {
        if (inclusions.contains(label)) {
            if (auto it = materials.find(label); it != materials.end()) {
                const double q0 = it->second.exponents().p0;
                const bool consistent = limit == LimitKind::pec ? q0 < p0 : q0 > p0;
                if (!consistent) {
                    std::ostringstream msg;
                    msg << "region " << label << " has small-field exponent " << q0 << ", inconsistent with a "
                        << (limit == LimitKind::pec ? "PEC" : "PEI") << " limit for p0 = " << p0;
                    out.warnings.push_back(msg.str());
                }
            }
            continue;
        }
        auto it = materials.find(label);
        if (it == materials.end()) throw InvalidArgument("no material for region " + std::to_string(label));
        const double claimed = it->second.exponents().p0;
        if (std::abs(claimed - p0) > kExponentTolerance) {
            std::ostringstream msg;
            msg << "region " << label << " has small-field exponent " << claimed << " but the sweep assumes p0 = " << p0;
            out.warnings.push_back(msg.str());
        }
        limit_materials.emplace(label, small_field_limit(it->second, p0));
    }
    LimitTreatment treatment;
    (limit == LimitKind::pec ? treatment.pec_regions : treatment.pei_regions) = inclusions;
    out.limit = solve_nonlinear(mesh, limit_materials, f, config, treatment);
    out.limit_energy = out.limit.energy;

    ElementMask b_mask(mesh.element_count(), 0);
    std::vector<char> b_node(mesh.node_count(), 0);
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        if (mesh.region(e) > 0) continue;
        b_mask[e] = 1;
        for (int v : mesh.element(e)) b_node[static_cast<std::size_t>(v)] = 1;
    }
    const auto& vlim = out.limit.nodal_potential;
    const double lim_l2 = std::sqrt(l2_norm_squared(mesh, vlim, b_mask));
    double lim_max = 0.0;
    for (std::size_t v = 0; v < vlim.size(); ++v) {
        if (b_node[v]) lim_max = std::max(lim_max, std::abs(vlim[v]));
    }
    if (!(lim_l2 > 0.0)) throw InvalidArgument("lambda_sweep: limit solution vanishes on B; errors undefined");

    Assembler assembler(mesh, f.nodes);
    std::vector<double> previous;
    double previous_lambda = 0.0;
    for (double lambda : lambdas) {
        SweepPoint pt;
        pt.lambda = lambda;
        DirichletBc bc{f.nodes, {}};
        for (double v : f.values) bc.values.push_back(lambda * v);
        NonlinearSolveConfig cfg = config;
        if (!previous.empty()) {
            cfg.initial = InitialGuess::provided;
            cfg.initial_field = previous;
            for (double& v : cfg.initial_field) v *= lambda / previous_lambda;
        }
        try {
            FieldSolution s = solve_nonlinear(assembler, materials, bc, cfg);
            std::vector<double> v = s.nodal_potential;
            for (double& x : v) x /= lambda;
            pt.e2 = std::sqrt(l2_distance_squared(mesh, v, vlim, b_mask)) / lim_l2;
            double dmax = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (b_node[i]) dmax = std::max(dmax, std::abs(v[i] - vlim[i]));
            }
            pt.einf = dmax / lim_max;
            pt.g0 = s.energy / std::pow(lambda, p0);
            pt.picard_iters = s.iterations;
            previous = std::move(s.nodal_potential);
            previous_lambda = lambda;
        } catch (const NonConvergence& err) {
            pt.ok = false;
            pt.error = err.what();
        } catch (const NumericalBreakdown& err) {
            pt.ok = false;
            pt.error = err.what();
        }
        out.points.push_back(pt);
    }
    return out;
}

}  // namespace qlert
