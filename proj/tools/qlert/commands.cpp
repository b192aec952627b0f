#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "qlert/dense.hpp"
#include "qlert/electrodes.hpp"
#include "qlert/error.hpp"
#include "qlert/fem.hpp"
#include "qlert/mesh_io.hpp"
#include "qlert/oracle.hpp"
#include "qlert/solver.hpp"
#include "qlert/tomography.hpp"
#include "render.hpp"

namespace qlert::cli {

namespace {

namespace fs = std::filesystem;

// "key = value" report lines after a provenance comment.
class Report {
public:
    explicit Report(const Provenance& p) { s_ << p.line("#") << '\n'; }

    template <class T>
    Report& add(const std::string& key, const T& value) {
        s_ << key << " = ";
        if constexpr (std::is_same_v<T, bool>) s_ << (value ? "true" : "false");
        else if constexpr (std::is_floating_point_v<T>) s_ << fmt(value);
        else s_ << value;
        s_ << '\n';
        return *this;
    }

    std::string str() const { return s_.str(); }

private:
    std::ostringstream s_;
};

std::string join_warnings(const std::vector<std::string>& w) {
    std::string out;
    for (const auto& s : w) out += (out.empty() ? "" : "; ") + s;
    return out.empty() ? "none" : out;
}

std::string matrix_csv(const DenseMatrix& g, const Provenance& p, const std::string& what) {
    std::ostringstream s;
    s << p.line("#") << '\n' << "# " << what << '\n' << "electrode";
    for (std::size_t j = 0; j < g.cols(); ++j) s << ',' << j;
    s << '\n';
    for (std::size_t i = 0; i < g.rows(); ++i) {
        s << i;
        for (std::size_t j = 0; j < g.cols(); ++j) s << ',' << fmt(g(i, j));
        s << '\n';
    }
    return s.str();
}

DirichletBc profile_bc(const RunConfig& cfg, const Mesh& mesh, double amplitude) {
    const double r = cfg.geometry->outer_radius;
    return boundary_dirichlet(mesh, [amplitude, r](Point2 p) { return amplitude * p.x / r; }, {0});
}

std::vector<double> element_average(const Mesh& mesh, const std::vector<double>& u) {
    std::vector<double> out(mesh.element_count());
    for (std::size_t e = 0; e < out.size(); ++e) {
        const Triangle& t = mesh.element(e);
        out[e] = (u[static_cast<std::size_t>(t[0])] + u[static_cast<std::size_t>(t[1])] + u[static_cast<std::size_t>(t[2])]) /
                 3.0;
    }
    return out;
}

int cmd_solve(const RunConfig& cfg, const RunOptions& opt, const Provenance& prov, std::ostream& log) {
    const Mesh mesh = cfg.geometry->build();
    const std::set<int> inclusions = cfg.geometry->inclusion_labels();
    const DirichletBc bc = profile_bc(cfg, mesh, cfg.boundary->amplitude);
    log << "solve: " << mesh.node_count() << " nodes, " << mesh.element_count() << " elements\n";

    FieldSolution sol;
    if (cfg.solve->model == ForwardModel::pec_limit)
        sol = solve_pec_limit(mesh, cfg.materials->matrix, inclusions, bc, cfg.solver);
    else
        sol = solve_nonlinear(mesh, cfg.materials->map_for(mesh), bc, cfg.solver);

    std::ostringstream pot;
    pot << prov.line("#") << '\n' << "node,x_m,y_m,u_V\n";
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        const Point2 p = mesh.node(static_cast<int>(i));
        pot << i << ',' << fmt(p.x) << ',' << fmt(p.y) << ',' << fmt(sol.nodal_potential[i]) << '\n';
    }
    write_text(opt.out / "potential.csv", pot.str());

    std::vector<double> e_abs(mesh.element_count());
    std::ostringstream el;
    el << prov.line("#") << '\n' << "element,region,Ex_V_per_m,Ey_V_per_m,E_V_per_m,sigma_S_per_m\n";
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const Point2 g = sol.element_gradient[e];
        e_abs[e] = norm(g);
        el << e << ',' << mesh.region(e) << ',' << fmt(-g.x) << ',' << fmt(-g.y) << ',' << fmt(e_abs[e]) << ','
           << fmt(sol.element_sigma[e]) << '\n';
    }
    write_text(opt.out / "elements.csv", el.str());

    HeatmapOptions hu{"potential u [V]", false, cfg.solve->image_size};
    write_text(opt.out / "potential.svg", heatmap_svg(mesh, element_average(mesh, sol.nodal_potential), hu, prov));
    HeatmapOptions he{"|E| [V/m], log scale", true, cfg.solve->image_size};
    write_text(opt.out / "field.svg", heatmap_svg(mesh, e_abs, he, prov));

    Report r(prov);
    r.add("mesh_id", mesh_fingerprint(mesh))
        .add("nodes", mesh.node_count())
        .add("elements", mesh.element_count())
        .add("model", cfg.solve->model == ForwardModel::pec_limit ? "pec_limit" : "nonlinear")
        .add("amplitude_V", cfg.boundary->amplitude)
        .add("picard_iterations", sol.iterations)
        .add("linear_iterations", sol.linear_iterations)
        .add("damping", sol.damping)
        .add("final_change", sol.residuals.empty() ? 0.0 : sol.residuals.back())
        .add("energy_J_per_m", sol.energy)
        .add("energy_descent_ok", sol.energy_descent_ok)
        .add("max_principle_ok", sol.max_principle_ok);
    if (!inclusions.empty()) {
        const InterfaceField f = interface_tangential_ratio(mesh, sol.element_gradient, inclusions);
        r.add("interface_elements", f.elements.size())
            .add("interface_tangential_ratio_max", f.max_ratio)
            .add("interface_tangential_ratio_mean", f.mean_ratio);
    }
    r.add("warnings", join_warnings(sol.warnings));
    write_text(opt.out / "report.txt", r.str());
    log << "solve: " << sol.iterations << " Picard iterations, energy " << fmt(sol.energy) << '\n';
    return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, const RunOptions& opt, const Provenance& prov, std::ostream& log) {
    const Mesh mesh = cfg.geometry->build();
    const SweepTask& t = *cfg.sweep;
    const DirichletBc f = profile_bc(cfg, mesh, cfg.boundary->amplitude);
    const std::vector<double> lambdas = lambda_grid(t.lambda_max, t.lambda_min, t.per_decade);
    log << "sweep: " << lambdas.size() << " points on " << mesh.element_count() << " elements\n";
    const LambdaSweep sw = lambda_sweep(mesh, cfg.materials->map_for(mesh), f, lambdas, t.limit, t.p0, cfg.solver);

    std::ostringstream csv;
    csv << prov.line("#") << '\n' << "lambda,e2,einf,G0_lambda,picard_iters,ok\n";
    Series e2{"e2", "#1f3fbf", {}, {}}, einf{"einf", "#c03020", {}, {}};
    bool failed = false;
    for (const auto& p : sw.points) {
        csv << fmt(p.lambda) << ',' << fmt(p.e2) << ',' << fmt(p.einf) << ',' << fmt(p.g0) << ',' << p.picard_iters << ','
            << (p.ok ? 1 : 0) << '\n';
        if (!p.ok) {
            failed = true;
            log << "sweep: lambda " << fmt(p.lambda) << " failed: " << p.error << '\n';
            continue;
        }
        e2.x.push_back(p.lambda);
        e2.y.push_back(p.e2);
        einf.x.push_back(p.lambda);
        einf.y.push_back(p.einf);
    }
    write_text(opt.out / "sweep.csv", csv.str());
    const std::vector<Series> series{e2, einf};
    write_text(opt.out / "sweep.svg", loglog_svg(series, "error of the limit approximation over B", "lambda", prov));

    double at_lo = 0.0, at_hi = 0.0;
    // e2 and einf are relative errors; increases below the linear-solver
    // tolerance are round-off on the plateau where the problem is linear.
    const double slack = cfg.solver.linear_tol;
    bool monotone = true;
    const SweepPoint* prev = nullptr;
    for (const auto& p : sw.points) {
        if (!p.ok) continue;
        if (prev && (p.e2 > prev->e2 + slack || p.einf > prev->einf + slack)) monotone = false;
        prev = &p;
    }
    if (!sw.points.empty()) {
        at_hi = sw.points.front().e2;
        at_lo = sw.points.back().e2;
    }
    Report r(prov);
    r.add("mesh_id", mesh_fingerprint(mesh))
        .add("points", sw.points.size())
        .add("limit", t.limit == LimitKind::pec ? "pec" : "pei")
        .add("p0", t.p0)
        .add("limit_energy", sw.limit_energy)
        .add("e2_at_lambda_max", at_hi)
        .add("e2_at_lambda_min", at_lo)
        .add("nonincreasing", monotone)
        .add("failed_points", failed)
        .add("warnings", join_warnings(sw.warnings));
    write_text(opt.out / "report.txt", r.str());
    return failed ? kExitNonConvergence : kExitOk;
}

int cmd_oracle(const RunConfig& cfg, const RunOptions& opt, const Provenance& prov, std::ostream& log) {
    const OracleTask& t = *cfg.oracle;
    log << "oracle: annulus r = " << fmt(t.r) << '\n';
    const std::vector<AnnulusLevel> levels = annulus_pec_validation(t.r, t.refinements);
    std::ostringstream an;
    an << prov.line("#") << '\n' << "refinement,nodes,rel_l2_error,order,nodal_rel_l2_error\n";
    for (const auto& l : levels)
        an << l.refinement << ',' << l.nodes << ',' << fmt(l.rel_l2_error) << ',' << fmt(l.order) << ','
           << fmt(l.nodal_rel_l2_error) << '\n';
    write_text(opt.out / "annulus.csv", an.str());

    const CounterexampleModel model = build_counterexample(t.big_l, t.lambda_pp1, t.cycles);
    const CounterexampleChecks checks = counterexample_checks(model);

    log << "oracle: energies at " << t.margin_radii.size() << " radii\n";
    std::ostringstream ce;
    ce << prov.line("#") << '\n' << "r,ell1,ell2,margin,separated\n";
    std::vector<CounterexampleEnergies> energies;
    for (double r : t.margin_radii) {
        energies.push_back(counterexample_energies(r, model));
        const auto& e = energies.back();
        ce << fmt(r) << ',' << fmt(e.ell1) << ',' << fmt(e.ell2) << ',' << fmt(e.margin) << ',' << (e.separated ? 1 : 0)
           << '\n';
    }
    write_text(opt.out / "counterexample.csv", ce.str());

    std::ostringstream fn;
    fn << prov.line("#") << '\n' << "r,n,lambda_p,G_lambda_p,lambda_pp,H_lambda_pp\n";
    for (const auto& e : energies) {
        for (std::size_t n = 0; n < e.lambda_p.size(); ++n)
            fn << fmt(e.r) << ',' << n + 1 << ',' << fmt(e.lambda_p[n]) << ',' << fmt(e.g_lambda_p[n]) << ','
               << fmt(e.lambda_pp[n]) << ',' << fmt(e.h_lambda_pp[n]) << '\n';
    }
    write_text(opt.out / "functionals.csv", fn.str());

    std::ostringstream ra;
    ra << prov.line("#") << '\n' << "r,gradient_energy_ratio\n";
    std::vector<double> ratios;
    for (double r : t.ratio_radii) {
        ratios.push_back(gradient_energy_ratio(r));
        ra << fmt(r) << ',' << fmt(ratios.back()) << '\n';
    }
    write_text(opt.out / "ratio.csv", ra.str());

    bool margin_growing = true;
    for (std::size_t i = 1; i < energies.size(); ++i) margin_growing = margin_growing && energies[i].margin > energies[i - 1].margin;
    bool ratio_monotone = true;
    for (std::size_t i = 1; i < ratios.size(); ++i)
        ratio_monotone = ratio_monotone && std::abs(ratios[i] - 1.0) < std::abs(ratios[i - 1] - 1.0);

    const AnnulusFields fields = annulus_fields(t.r);
    Report r(prov);
    r.add("annulus_r", t.r)
        .add("annulus_gamma", fields.gamma)
        .add("annulus_finest_rel_l2_error", levels.empty() ? 0.0 : levels.back().rel_l2_error)
        .add("annulus_finest_order", levels.empty() ? 0.0 : levels.back().order)
        .add("gradient_bounds_hold", fields.gradient_bounds_hold())
        .add("L", t.big_l)
        .add("cycles", model.cycles())
        .add("ratio_error", checks.ratio_error)
        .add("continuity_error", checks.continuity_error)
        .add("min_slope_jump", checks.min_slope_jump)
        .add("interleaved", checks.interleaved)
        .add("invariants_ok_1e-12", checks.ok(1e-12));
    for (const auto& e : energies) {
        const std::string k = "r" + fmt(e.r) + "_";
        r.add(k + "ell1", e.ell1).add(k + "ell2", e.ell2).add(k + "margin", e.margin);
    }
    r.add("margin_strictly_growing", margin_growing)
        .add("ratio_monotone_to_1", ratio_monotone)
        .add("warnings", join_warnings(fields.warnings));
    write_text(opt.out / "report.txt", r.str());
    return kExitOk;
}

int cmd_tomo(const RunConfig& cfg, const RunOptions& opt, const Provenance& prov, std::ostream& log) {
    const TomoTask& t = *cfg.tomo;
    const Mesh mesh = tag_electrodes(cfg.geometry->build(), *cfg.boundary->electrodes);
    const int n = mesh.electrode_count();

    ElementMask truth(mesh.element_count(), 0);
    for (const auto& d : t.defect) {
        const ElementMask m = disc_mask(mesh, d.center, d.radius);
        for (std::size_t e = 0; e < truth.size(); ++e) truth[e] |= m[e];
    }
    if (std::find(truth.begin(), truth.end(), 1) == truth.end())
        throw ConfigError("task.tomo.defect_discs", "the defect covers no matrix element");
    const Mesh defected = with_defect(mesh, truth, 1);

    ConductanceOptions co;
    co.model = t.forward;
    co.amplitude = cfg.boundary->amplitude;
    co.solver = cfg.solver;
    co.threads = opt.threads;

    log << "tomo: " << n << " electrodes, " << mesh.element_count() << " elements\n";
    co.scenario_id = "background";
    const ConductanceMatrix bg = conductance_matrix(mesh, cfg.materials->map_for(mesh), co);
    co.scenario_id = "defect";
    const ConductanceMatrix gv = conductance_matrix(defected, cfg.materials->map_for(defected), co);

    const double dg_max = max_abs_difference(gv.g, bg.g);
    const std::uint64_t seed = opt.seed.value_or(t.seed);
    const DenseMatrix noise = goe_noise(static_cast<std::size_t>(n), t.eta, dg_max, seed);
    DenseMatrix measured = gv.g;
    measured += noise;
    const double noise_norm = spectral_norm_symmetric(noise);
    const double delta = t.delta.value_or(noise_norm);

    const std::vector<TestDomain> domains = disc_test_domains(mesh, t.test_radii, t.test_spacing);
    log << "tomo: " << domains.size() << " test domains\n";
    const std::vector<ConductanceMatrix> tests =
        test_domain_matrices(mesh, domains, cfg.materials->matrix, cfg.materials->defect_model(), co);
    std::vector<DenseMatrix> test_g;
    std::vector<ElementMask> test_masks;
    for (std::size_t k = 0; k < domains.size(); ++k) {
        test_g.push_back(tests[k].g);
        test_masks.push_back(domains[k].mask);
    }
    const double tol = t.tol_rel * bg.g.max_abs();
    const Reconstruction rec = mpm_reconstruct(measured, test_g, test_masks, delta, tol);
    const ReconstructionMetrics metrics = reconstruction_metrics(mesh, truth, rec.union_mask);

    write_text(opt.out / "G_background.csv", matrix_csv(bg.g, prov, "conductance matrix, background [S per unit depth]"));
    write_text(opt.out / "G_defect.csv", matrix_csv(gv.g, prov, "conductance matrix, defect, noiseless [S per unit depth]"));
    write_text(opt.out / "G_measured.csv", matrix_csv(measured, prov, "conductance matrix, defect plus noise [S per unit depth]"));

    std::ostringstream td;
    td << prov.line("#") << '\n' << "id,center_x_m,center_y_m,radius_m,min_eig_deflated,min_eig_full,accepted\n";
    std::vector<char> accepted(domains.size(), 0);
    for (int k : rec.accepted) accepted[static_cast<std::size_t>(k)] = 1;
    for (std::size_t k = 0; k < domains.size(); ++k)
        td << domains[k].id << ',' << fmt(domains[k].center.x) << ',' << fmt(domains[k].center.y) << ','
           << fmt(domains[k].radius) << ',' << fmt(rec.min_eigenvalue[k]) << ',' << fmt(rec.min_eigenvalue_full[k]) << ','
           << static_cast<int>(accepted[k]) << '\n';
    write_text(opt.out / "test_domains.csv", td.str());

    std::ostringstream mk;
    mk << prov.line("#") << '\n' << "element,region,truth,estimate\n";
    for (std::size_t e = 0; e < mesh.element_count(); ++e)
        mk << e << ',' << mesh.region(e) << ',' << static_cast<int>(truth[e]) << ',' << static_cast<int>(rec.union_mask[e])
           << '\n';
    write_text(opt.out / "masks.csv", mk.str());
    write_text(opt.out / "reconstruction.svg",
               overlay_svg(mesh, truth, rec.union_mask, t.image_size, "upper bound (filled) and true defect (outline)", prov));

    Report r(prov);
    r.add("mesh_id", mesh_fingerprint(mesh))
        .add("electrodes", n)
        .add("amplitude_V", co.amplitude)
        .add("forward", t.forward == ForwardModel::nonlinear ? "nonlinear" : "pec_limit")
        .add("seed", seed)
        .add("eta", t.eta)
        .add("dg_max_S", dg_max)
        .add("noise_norm_S", noise_norm)
        .add("delta_S", delta)
        .add("psd_tol_S", tol)
        .add("asymmetry_background", bg.asymmetry)
        .add("asymmetry_defect", gv.asymmetry)
        .add("picard_iterations", bg.picard_iterations + gv.picard_iterations)
        .add("test_domains", domains.size())
        .add("accepted", rec.accepted.size())
        .add("coverage", metrics.coverage)
        .add("excess", metrics.excess)
        .add("upper_bound", metrics.upper_bound);
    write_text(opt.out / "report.txt", r.str());
    log << "tomo: accepted " << rec.accepted.size() << " of " << domains.size() << ", upper bound "
        << (metrics.upper_bound ? "holds" : "fails") << '\n';
    return kExitOk;
}

}  // namespace

int run_command(const RunConfig& cfg, const RunOptions& opt, std::ostream& log) {
    if (opt.threads < 1) throw ConfigError("--threads", "must be at least 1");
    std::error_code ec;
    fs::create_directories(opt.out, ec);
    if (ec || !fs::is_directory(opt.out)) throw IoError("cannot create output directory " + opt.out.string());

    Provenance prov;
    prov.command = command_name(cfg.command);
    prov.config_hash = cfg.hash;
    prov.seed = cfg.tomo ? opt.seed.value_or(cfg.tomo->seed) : opt.seed.value_or(0);

    switch (cfg.command) {
        case Command::solve: return cmd_solve(cfg, opt, prov, log);
        case Command::sweep: return cmd_sweep(cfg, opt, prov, log);
        case Command::oracle: return cmd_oracle(cfg, opt, prov, log);
        case Command::tomo: return cmd_tomo(cfg, opt, prov, log);
    }
    return kExitFailure;
}

int exit_code_for(const std::exception& error) {
    if (dynamic_cast<const ConfigError*>(&error) || dynamic_cast<const ParseError*>(&error) ||
        dynamic_cast<const InvalidArgument*>(&error) || dynamic_cast<const InvalidGeometry*>(&error) ||
        dynamic_cast<const ConflictError*>(&error) || dynamic_cast<const SingularSystem*>(&error))
        return kExitConfig;
    if (dynamic_cast<const NonConvergence*>(&error) || dynamic_cast<const NumericalBreakdown*>(&error))
        return kExitNonConvergence;
    if (dynamic_cast<const IoError*>(&error) || dynamic_cast<const std::filesystem::filesystem_error*>(&error))
        return kExitIo;
    return kExitFailure;
}

}  // namespace qlert::cli
