#include <benchmark/benchmark.h>

#include "vulnlab/american.hpp"
#include "vulnlab/european.hpp"
#include "vulnlab/filtration.hpp"
#include "vulnlab/instances.hpp"
#include "vulnlab/measure_change.hpp"
#include "vulnlab/random_time.hpp"

using namespace vulnlab;

namespace {

// Binary tree with `steps` periods, hazard on every other layer and P <= R on the support.
ReducedInstance binary_instance(std::size_t steps) {
    FiniteTree t = FiniteTree::build(TreeSpec::uniform(TimeGrid::uniform(steps, 1.0), {0.5, 0.5}, {0.45, 0.55}));
    std::vector<double> delta(t.node_count(), 0.0);
    for (NodeId v = 0; v < t.node_count(); ++v)
        if (!t.is_terminal(v) && t.time_of(v) % 2 == 0) delta[v] = 0.3;
    ReducedHazard hz = ReducedHazard::make(t, delta);
    PayoffSpec p{AdaptedProcess::generate(t, [](NodeId v) { return 0.5 + 0.4 * ((v * 7919) % 101) / 101.0; }),
                 AdaptedProcess::constant(t, 1.0)};
    return {std::move(t), std::move(hz), std::move(p)};
}

void BM_PenalizedEuropean(benchmark::State& st) {
    const ReducedInstance e = binary_instance(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(penalized_european(e.tree, 1024, e.payoff, e.hz).value[0]);
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(e.tree.node_count()));
}
BENCHMARK(BM_PenalizedEuropean)->Arg(8)->Arg(12)->Arg(16);

void BM_ConstrainedSnell(benchmark::State& st) {
    const ReducedInstance e = binary_instance(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(constrained_snell(e.tree, e.payoff, e.hz).value[0]);
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(e.tree.node_count()));
}
BENCHMARK(BM_ConstrainedSnell)->Arg(8)->Arg(12)->Arg(16);

void BM_ReflectedSolve(benchmark::State& st) {
    const ReducedInstance e = binary_instance(static_cast<std::size_t>(st.range(0)));
    const Generator f = Generator::linear(AdaptedProcess::constant(e.tree, 1.0), e.payoff.R);
    for (auto _ : st) benchmark::DoNotOptimize(reflected_gbsde_solve(e.tree, f, e.payoff.P, e.payoff.P, e.hz).value[0]);
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(e.tree.node_count()));
}
BENCHMARK(BM_ReflectedSolve)->Arg(8)->Arg(12)->Arg(16);

void BM_GameRecursion(benchmark::State& st) {
    const ReducedInstance e = binary_instance(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(constrained_dynkin_game(e.tree, e.payoff, e.hz).value[0]);
}
BENCHMARK(BM_GameRecursion)->Arg(8)->Arg(12)->Arg(16);

void BM_GameBruteForce(benchmark::State& st) {
    const ReducedInstance e = binary_instance(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(brute_force_game(e.tree, e.payoff, e.hz).infsup);
}
BENCHMARK(BM_GameBruteForce)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_Projections(benchmark::State& st) {
    const auto steps = static_cast<std::size_t>(st.range(0));
    const FiniteTree t = FiniteTree::build(TreeSpec::uniform(TimeGrid::uniform(steps, 1.0), {0.5, 0.5}));
    const ExtendedSpace ext = ExtendedSpace::cox_extend(t, HazardSpec::constant(t, 0.2));
    for (auto _ : st) benchmark::DoNotOptimize(projections(ext).G[0]);
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(ext.atom_count()));
}
BENCHMARK(BM_Projections)->Arg(4)->Arg(8)->Arg(10);

void BM_HazardUnderPhi(benchmark::State& st) {
    Rng rng(1);
    const auto steps = static_cast<std::size_t>(st.range(0));
    const FiniteTree t = FiniteTree::build(TreeSpec::uniform(TimeGrid::uniform(steps, 1.0), {0.5, 0.5}));
    const ExtendedSpace ext = ExtendedSpace::cox_extend(t, HazardSpec::constant(t, 0.2));
    const PhiControl phi = random_phi(rng, ext);
    for (auto _ : st) benchmark::DoNotOptimize(hazard_under_phi(ext, phi).max_residual);
}
BENCHMARK(BM_HazardUnderPhi)->Arg(4)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
