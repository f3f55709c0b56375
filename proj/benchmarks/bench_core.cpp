#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "fpeproj/expfam.hpp"
#include "fpeproj/ode.hpp"
#include "fpeproj/oracle.hpp"
#include "fpeproj/projection.hpp"
#include "fpeproj/sde.hpp"
#include "fpeproj/synth.hpp"

using namespace fpeproj;

namespace {

Vector quartic_theta() {
    Vector t(4);
    t << -0.26, -0.26, 0.0024, -0.026;
    return t;
}

void BM_DensityNodes(benchmark::State& state) {
    const ExpFamily fam = hermite_family(static_cast<int>(state.range(0)), BackgroundDensity::lebesgue());
    Vector t = Vector::Zero(fam.n());
    t[fam.n() - 1] = -0.05;
    if (fam.n() == 2) t[1] = -0.5;
    for (auto _ : state) benchmark::DoNotOptimize(density_nodes(fam, {t}));
}
BENCHMARK(BM_DensityNodes)->Arg(2)->Arg(4)->Arg(6);

void BM_ProjectedRhs(benchmark::State& state) {
    const ExpFamily fam = hermite_family(4, BackgroundDensity::lebesgue());
    const SdeModel model = double_well(2.0);
    const ProjectedState s{0.0, {quartic_theta()}};
    for (auto _ : state) benchmark::DoNotOptimize(projected_rhs(fam, model, s));
}
BENCHMARK(BM_ProjectedRhs);

void BM_NaturalFromMean(benchmark::State& state) {
    const ExpFamily fam = hermite_family(4, BackgroundDensity::lebesgue());
    const ExpectationParams eta = mean_params(fam, {quartic_theta()});
    Vector guess(4);
    guess << 0.0, -0.5, 0.0, -0.01;
    for (auto _ : state) benchmark::DoNotOptimize(natural_from_mean(fam, eta, {guess}, 1e-10, {}));
}
BENCHMARK(BM_NaturalFromMean);

void BM_ProjectedFlow(benchmark::State& state) {
    const ExpFamily fam = monomial_family(2, BackgroundDensity::lebesgue());
    const IvpProblem p = projected_flow(fam, double_well(2.0), gaussian_theta(1.0, 1.0), 0.0, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(integrate(p, {}));
}
BENCHMARK(BM_ProjectedFlow)->Unit(benchmark::kMillisecond);

void BM_FpeSolve(benchmark::State& state) {
    const Grid1D grid{-10.0, 10.0, static_cast<int>(state.range(0))};
    const GridDensity p0 = GridDensity::gaussian(grid, 1.0, 0.25);
    for (auto _ : state) benchmark::DoNotOptimize(fpe_solve(double_well(2.0), p0, 0.0, 0.1, 1e-3));
    state.SetItemsProcessed(state.iterations() * 100 * state.range(0));
}
BENCHMARK(BM_FpeSolve)->Arg(1001)->Arg(2001)->Unit(benchmark::kMillisecond);

void BM_SimulateEm(benchmark::State& state) {
    const ExpFamily fam = monomial_family(2, BackgroundDensity::lebesgue());
    Trajectory path;
    path.times = {0.0, 1.0};
    path.states = {gaussian_theta(0.0, 1.0).theta, gaussian_theta(0.0, 1.0).theta};
    const SynthesizedDrift drift(ornstein_uhlenbeck(1.0, 2.0), fam, path, Grid1D{-10.0, 10.0, 2001});
    SimulateOptions o;
    o.threads = 1;
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(simulate_em(drift, [](std::mt19937_64& g) { return std::normal_distribution<double>()(g); },
                                             n, 1e-2, 1.0, 7, o));
    state.SetItemsProcessed(state.iterations() * 100 * state.range(0));
}
BENCHMARK(BM_SimulateEm)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
