#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "gridswitch/analysis.hpp"
#include "gridswitch/passivity.hpp"
#include "gridswitch/report.hpp"
#include "gridswitch/scenario.hpp"

using namespace gridswitch;

namespace {

Scenario bundled(const char* name) {
    return load_scenario(std::string(GRIDSWITCH_SCENARIO_DIR) + "/" + name + ".json");
}

void BM_SwingRhs(benchmark::State& state) {
    const Plant p = build_plant(bundled("nine_bus_ring"));
    const auto eq = solve_equilibrium(p);
    const HybridState x = equilibrium_state(eq);
    const std::size_t n = p.network.bus_count();
    std::vector<double> s(n, 0.0), d(n, 0.0), eta_dot(p.network.line_count()), omega_dot(n);
    const auto load = p.final_load();
    for (auto _ : state) {
        swing_rhs_into(p.network, x.continuous.eta, x.continuous.omega, load, s, d, eta_dot, omega_dot);
        benchmark::DoNotOptimize(omega_dot.data());
    }
}
BENCHMARK(BM_SwingRhs);

void BM_IntegrateFlow(benchmark::State& state) {
    const Plant p = build_plant(bundled("nine_bus_ring"));
    const HybridState x = equilibrium_state(solve_equilibrium(p.network, p.supplies, p.network.base_loads()));
    for (auto _ : state) benchmark::DoNotOptimize(integrate_flow(p, x, 1e-3));
}
BENCHMARK(BM_IntegrateFlow);

void BM_Simulate(benchmark::State& state, const char* name, LoadMode mode) {
    Scenario s = with_load_mode(bundled(name), mode);
    const Plant p = build_plant(s);
    const HybridState x = equilibrium_state(solve_equilibrium(p.network, p.supplies, p.network.base_loads()));
    for (auto _ : state) benchmark::DoNotOptimize(simulate(p, s.solver, x));
}
BENCHMARK_CAPTURE(BM_Simulate, two_bus_hysteresis, "two_bus", LoadMode::Hysteresis)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Simulate, nine_bus_none, "nine_bus_ring", LoadMode::None)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Simulate, nine_bus_switching, "nine_bus_ring", LoadMode::Switching)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Simulate, nine_bus_hysteresis, "nine_bus_ring", LoadMode::Hysteresis)
    ->Unit(benchmark::kMillisecond);

void BM_RunScenario(benchmark::State& state) {
    const Scenario s = bundled("nine_bus_ring");
    for (auto _ : state) benchmark::DoNotOptimize(run_scenario(s));
}
BENCHMARK(BM_RunScenario)->Unit(benchmark::kMillisecond);

void BM_SolveEquilibrium(benchmark::State& state) {
    const Plant p = build_plant(bundled("nine_bus_ring"));
    for (auto _ : state) benchmark::DoNotOptimize(solve_equilibrium(p));
}
BENCHMARK(BM_SolveEquilibrium)->Unit(benchmark::kMicrosecond);

void BM_CheckPassivity(benchmark::State& state) {
    const SupplyModel gov = turbine_governor(GovernorParams{});
    const auto grid = log_frequency_grid(1e-3, 1e3, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(check_passivity(gov, 0.0, grid));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CheckPassivity)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_DeriveStorage(benchmark::State& state) {
    const SupplyModel gov = turbine_governor(GovernorParams{});
    for (auto _ : state) benchmark::DoNotOptimize(derive_storage(gov, 0.0));
}
BENCHMARK(BM_DeriveStorage)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
