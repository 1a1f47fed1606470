// Serial reference vs OpenMP kernels: likelihood + gradient, cumulative weather, forest growth.

#include "graphcp/forest.hpp"
#include "graphcp/kernels.hpp"
#include "graphcp/random.hpp"
#include "graphcp/synthetic.hpp"

#include <benchmark/benchmark.h>

#include <map>

using namespace graphcp;

namespace {

struct Problem {
    ServiceGraph graph;
    PanelDataset panel;
    ModelParams params;
};

const Problem& problem(std::size_t side) {
    static std::map<std::size_t, Problem> cache;
    auto it = cache.find(side);
    if (it == cache.end()) {
        ScenarioConfig c;
        c.graph = make_grid(side, side);
        c.times = 2000;
        c.weather = {{"wind", 0.0, 0.8, 1.0}, {"rain", 0.0, 0.6, 1.0}};
        c.truth = default_params(c.graph, 2, 8, 96, 1);
        c.truth.alpha.assign(c.graph.num_edges(), 0.05);
        c.truth.beta.assign(c.graph.num_nodes(), 2.0);
        c.seed = 3;
        auto panel = simulate(c);
        it = cache.emplace(side, Problem{c.graph, std::move(panel), c.truth}).first;
    }
    return it->second;
}

template <auto Evaluate>
void likelihood(benchmark::State& state) {
    const auto& p = problem(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto terms = Evaluate(p.panel, p.graph, p.params, TimeRange{0, p.panel.times()}, true);
        benchmark::DoNotOptimize(terms.log_likelihood);
    }
    state.counters["units"] = static_cast<double>(p.panel.units());
}

template <auto Weather>
void weather(benchmark::State& state) {
    const auto& p = problem(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto v = Weather(p.panel, p.params.omega, p.params.window_d);
        benchmark::DoNotOptimize(v.values.data());
    }
}

void forest(benchmark::State& state) {
    rng::Engine e(5);
    FeatureMatrix x(2000, 20);
    std::vector<double> y(2000);
    for (std::size_t r = 0; r < x.rows; ++r) {
        for (std::size_t c = 0; c < x.cols; ++c) x(r, c) = rng::normal(e);
        y[r] = x(r, 0) + 0.5 * x(r, 1) * x(r, 2) + rng::normal(e);
    }
    ForestConfig cfg;
    cfg.n_trees = 100;
    cfg.parallel = state.range(0) != 0;
    for (auto _ : state) {
        auto f = QuantileForest::fit(x, y, cfg);
        benchmark::DoNotOptimize(f);
    }
}

} // namespace

BENCHMARK(likelihood<kernels::serial::evaluate>)->Name("likelihood/serial")->Arg(3)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(likelihood<kernels::parallel::evaluate>)->Name("likelihood/parallel")->Arg(3)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(weather<kernels::serial::cumulative_weather>)->Name("weather/serial")->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(weather<kernels::parallel::cumulative_weather>)->Name("weather/parallel")->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(forest)->Name("forest/serial")->Arg(0)->Unit(benchmark::kMillisecond);
BENCHMARK(forest)->Name("forest/parallel")->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
