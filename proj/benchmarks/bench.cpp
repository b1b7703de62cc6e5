// Micro-benchmarks for the hot paths: the cap CDF recursion, per-trial
// sampling, tallying, and the martingale scan.

#include <benchmark/benchmark.h>

#include "bellsim/geometry.hpp"
#include "bellsim/models.hpp"
#include "bellsim/rng.hpp"
#include "bellsim/stats.hpp"
#include "bellsim/tally.hpp"

using namespace bellsim;

namespace {

models::ModelSpec make_model(models::ModelKind kind, int dim, int k, int l) {
    RngStream rng = RngStream::for_module(1, "keys");
    auto [a, b] = models::carol_keys(dim, k, l, rng);
    models::ModelSpec m;
    m.kind = kind;
    m.alice = std::move(a);
    m.bob = std::move(b);
    return m;
}

std::vector<TrialRecord> sample_run(const models::ModelSpec& m, std::int64_t n) {
    std::vector<TrialRecord> log;
    log.reserve(static_cast<std::size_t>(n));
    for (std::int64_t t = 0; t < n; ++t) {
        RngStream pick = RngStream::for_trial(2, "settings", static_cast<std::uint64_t>(t));
        const int i = 1 + static_cast<int>(pick.next_below(static_cast<std::uint64_t>(m.k())));
        const int j = 1 + static_cast<int>(pick.next_below(static_cast<std::uint64_t>(m.l())));
        const auto o =
            models::sample_trial(m, i, j, RngStream::for_trial(2, "model", static_cast<std::uint64_t>(t)));
        TrialRecord r;
        r.trial = t;
        r.a = i;
        r.b = j;
        r.x = o.x;
        r.y = o.y;
        log.push_back(r);
    }
    return log;
}

void BM_CdfH(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    double g = 0.1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(geom::cdf_h(g, n));
        g += 1e-6;
        if (g > 3.1) g = 0.1;
    }
}
BENCHMARK(BM_CdfH)->Arg(2)->Arg(5)->Arg(20);

void BM_SampleSinglet(benchmark::State& state) {
    const auto m = make_model(models::ModelKind::Singlet, 2, 2, 2);
    std::uint64_t t = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            models::sample_trial(m, 1 + (t & 1), 1 + ((t >> 1) & 1),
                                 RngStream::for_trial(3, "model", t)));
        ++t;
    }
}
BENCHMARK(BM_SampleSinglet);

void BM_SampleLoopOfFour(benchmark::State& state) {
    const auto m = make_model(models::ModelKind::LoopOfFour, 2, 30, 30);
    std::uint64_t t = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(models::sample_trial(
            m, 1 + static_cast<int>(t % 30), 1 + static_cast<int>((t / 30) % 30),
            RngStream::for_trial(4, "model", t)));
        ++t;
    }
}
BENCHMARK(BM_SampleLoopOfFour);

void BM_Tally(benchmark::State& state) {
    const auto m = make_model(models::ModelKind::NSphereGraph, 2, 4, 4);
    const auto log = sample_run(m, 100000);
    for (auto _ : state) {
        benchmark::DoNotOptimize(tally(log, 4, 4));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(log.size()));
}
BENCHMARK(BM_Tally);

void BM_MartingaleScan(benchmark::State& state) {
    const auto m = make_model(models::ModelKind::Singlet, 2, 2, 2);
    const auto log = sample_run(m, 100000);
    const stats::ChshSelection sel;
    for (auto _ : state) {
        benchmark::DoNotOptimize(stats::martingale_pvalue(log, sel));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(log.size()));
}
BENCHMARK(BM_MartingaleScan);

} // namespace

BENCHMARK_MAIN();
