#include <benchmark/benchmark.h>

#include "allflow/dynamics.hpp"
#include "allflow/homotopy.hpp"
#include "allflow/netmodel.hpp"
#include "allflow/steady_poly.hpp"
#include "harness.hpp"
#include "oracles.hpp"

using namespace allflow;

namespace {

const net::Network& seven_bus()
{
    static const net::Network net = net::load_case_file(oracle::case_path("seven_bus_representative.json"));
    return net;
}

const steady::EquilibriumProblem& seven_bus_problem()
{
    static const auto p = steady::build_equilibrium_system(seven_bus(), 1.0, 0.98, steady::Formulation::eliminated);
    return p;
}

void evaluate_eliminated(benchmark::State& state)
{
    const poly::CompiledSystem sys(seven_bus_problem().system);
    Eigen::VectorXcd x = Eigen::VectorXcd::Constant(sys.variable_count(), {0.9, 0.1});
    Eigen::VectorXcd f;
    Eigen::MatrixXcd jac;
    for (auto _ : state) {
        sys.evaluate(x, f, jac);
        benchmark::DoNotOptimize(jac.data());
    }
}
BENCHMARK(evaluate_eliminated);

void track_total_degree_paths(benchmark::State& state)
{
    const auto& p = seven_bus_problem();
    const homotopy::TrackerConfig cfg;
    const poly::CompiledSystem target(p.system);
    const auto start = homotopy::make_start_system(p.system, cfg);
    const homotopy::LinearHomotopy h(start, target);
    std::uint64_t index = 0;
    for (auto _ : state) {
        const auto r = homotopy::track_path(h, start.point(index), cfg, index);
        benchmark::DoNotOptimize(r.endpoint.data());
        index = (index + 977) % start.size();
    }
}
BENCHMARK(track_total_degree_paths)->Unit(benchmark::kMillisecond);

void linearize_seven_bus(benchmark::State& state)
{
    const auto& p = seven_bus_problem();
    const Eigen::VectorXd x = harness::newton_from_flat(p);
    const auto s = steady::interpret(seven_bus(), p, x.cast<std::complex<double>>(), steady::parameter_values(1.0, 0.98));
    const auto op = dyn::initialize(seven_bus(), s, 1.0);
    for (auto _ : state) {
        const auto lin = dyn::linearize(op);
        benchmark::DoNotOptimize(lin.reduced.data());
    }
}
BENCHMARK(linearize_seven_bus)->Unit(benchmark::kMicrosecond);

void eigenvalues_seven_bus(benchmark::State& state)
{
    const auto& p = seven_bus_problem();
    const Eigen::VectorXd x = harness::newton_from_flat(p);
    const auto s = steady::interpret(seven_bus(), p, x.cast<std::complex<double>>(), steady::parameter_values(1.0, 0.98));
    const auto lin = dyn::linearize(dyn::initialize(seven_bus(), s, 1.0));
    for (auto _ : state) benchmark::DoNotOptimize(dyn::eigenvalues(lin.reduced));
}
BENCHMARK(eigenvalues_seven_bus)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
