#include <benchmark/benchmark.h>

#include <random>

#include "qlert/dense.hpp"
#include "qlert/electrodes.hpp"
#include "qlert/fem.hpp"
#include "qlert/mesh_generate.hpp"
#include "qlert/scenario.hpp"
#include "qlert/solver.hpp"
#include "qlert/sparse.hpp"
#include "qlert/tomography.hpp"

using namespace qlert;

static void BM_CableMesh(benchmark::State& state) {
    const CableScenario s = CableScenario::reference(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(s.mesh());
}
BENCHMARK(BM_CableMesh)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

static void BM_Assemble(benchmark::State& state) {
    const Mesh mesh = generate_annulus(1.0, 10.0, static_cast<int>(state.range(0)));
    const DirichletBc bc = boundary_dirichlet(mesh, [](Point2 p) { return p.x; });
    const Assembler a(mesh, bc.nodes);
    const std::vector<double> sigma(mesh.element_count(), 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(a.assemble(sigma, bc.values));
    state.counters["nodes"] = static_cast<double>(mesh.node_count());
}
BENCHMARK(BM_Assemble)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_CgSolve(benchmark::State& state) {
    const Mesh mesh = generate_annulus(1.0, 10.0, static_cast<int>(state.range(0)));
    const DirichletBc bc = boundary_dirichlet(mesh, [](Point2 p) { return p.x; });
    const Assembler a(mesh, bc.nodes);
    const std::vector<double> sigma(mesh.element_count(), 1.0);
    const StiffnessSystem sys = a.assemble(sigma, bc.values);
    for (auto _ : state) {
        std::vector<double> x(sys.rhs.size(), 0.0);
        benchmark::DoNotOptimize(solve_cg(sys.matrix, sys.rhs, x));
    }
}
BENCHMARK(BM_CgSolve)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_CableNonlinearSolve(benchmark::State& state) {
    const CableScenario s = CableScenario::reference(2);
    const Mesh mesh = s.mesh();
    const MaterialMap mat = s.materials(mesh);
    const DirichletBc bc = s.x_linear(mesh, 1e-3);
    for (auto _ : state) benchmark::DoNotOptimize(solve_nonlinear(mesh, mat, bc));
}
BENCHMARK(BM_CableNonlinearSolve)->Unit(benchmark::kMillisecond);

static void BM_ConductanceMatrix(benchmark::State& state) {
    const CableScenario s = CableScenario::reference(2);
    const Mesh mesh = tag_electrodes(s.mesh(), ElectrodeLayout::uniform(16, 0.5));
    const MaterialMap mat = s.materials(mesh);
    ConductanceOptions opt;
    opt.model = ForwardModel::pec_limit;
    for (auto _ : state) benchmark::DoNotOptimize(conductance_matrix(mesh, mat, opt));
}
BENCHMARK(BM_ConductanceMatrix)->Unit(benchmark::kMillisecond);

static void BM_JacobiEigen(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    DenseMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = g(rng);
    for (auto _ : state) benchmark::DoNotOptimize(jacobi_eigen(a));
}
BENCHMARK(BM_JacobiEigen)->Arg(16)->Arg(32);
BENCHMARK_MAIN();
