#include <doctest.h>

#include "graphcp/error.hpp"
#include "graphcp/random.hpp"
#include "graphcp/synthetic.hpp"
#include "oracles.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>

#include <algorithm>
#include <cmath>

using namespace graphcp;

namespace {

ScenarioConfig base_config(const ServiceGraph& g, std::size_t times) {
    ScenarioConfig c;
    c.graph = g;
    c.times = times;
    c.weather = {{"wind", 0.0, 0.7, 1.0}};
    c.truth = default_params(g, 1, 1, 8, 0);
    c.truth.phi = ResponseWeights::zeros(1, 1);
    c.seed = 99;
    return c;
}

double chi_square_pvalue(const std::vector<std::int64_t>& draws, double lambda) {
    // Bins: one per integer over the central mass, tails merged so every expected count is >= 5.
    const boost::math::poisson_distribution<double> dist(lambda);
    const auto n = static_cast<double>(draws.size());
    std::vector<std::pair<std::int64_t, std::int64_t>> bins; // [lo, hi]
    std::int64_t lo = 0;
    const auto max_k = static_cast<std::int64_t>(lambda + 12 * std::sqrt(lambda) + 10);
    while (lo <= max_k) {
        std::int64_t hi = lo;
        double mass = boost::math::pdf(dist, static_cast<double>(lo));
        while (mass * n < 5.0 && hi < max_k) mass += boost::math::pdf(dist, static_cast<double>(++hi));
        bins.emplace_back(lo, hi);
        lo = hi + 1;
    }
    bins.back().second = std::numeric_limits<std::int64_t>::max();
    if (bins.size() > 1 && (1.0 - boost::math::cdf(dist, static_cast<double>(bins[bins.size() - 2].second))) * n < 5.0) {
        bins[bins.size() - 2].second = bins.back().second;
        bins.pop_back();
    }
    double stat = 0.0;
    for (const auto& [a, b] : bins) {
        const double below = a == 0 ? 0.0 : boost::math::cdf(dist, static_cast<double>(a - 1));
        const double upto = b == std::numeric_limits<std::int64_t>::max() ? 1.0 : boost::math::cdf(dist, static_cast<double>(b));
        const double expected = (upto - below) * n;
        const auto observed = static_cast<double>(
            std::count_if(draws.begin(), draws.end(), [&](std::int64_t k) { return k >= a && k <= b; }));
        stat += (observed - expected) * (observed - expected) / expected;
    }
    const boost::math::chi_squared_distribution<double> chi(static_cast<double>(bins.size() - 1));
    return 1.0 - boost::math::cdf(chi, stat);
}

} // namespace

TEST_CASE("Poisson sampler passes chi-square goodness of fit at the 1% level") {
    for (double lambda : {0.3, 2.5, 12.0, 29.5, 30.0, 75.0, 400.0}) {
        CAPTURE(lambda);
        rng::Engine engine(rng::derive(2024, static_cast<std::uint64_t>(lambda * 10)));
        std::vector<std::int64_t> draws(20000);
        for (auto& d : draws) d = rng::poisson(engine, lambda);
        CHECK(chi_square_pvalue(draws, lambda) > 0.01);
    }
}

TEST_CASE("simulated counts given their frozen intensity are Poisson") {
    // Simulate once, freeze λ, then resample counts conditionally and test each λ bucket.
    auto c = base_config(make_star(4), 600);
    c.truth.gamma.assign(4, 3.0);
    c.truth.beta.assign(4, 1.2);
    c.truth.alpha.assign(3, 0.3);
    const auto panel = simulate(c);
    const auto field = intensity_field(panel, c.graph, c.truth);
    rng::Engine engine(5);
    const double lambda = field.at(2, 300);
    std::vector<std::int64_t> draws(20000);
    for (auto& d : draws) d = rng::poisson(engine, lambda);
    CHECK(chi_square_pvalue(draws, lambda) > 0.01);
}

TEST_CASE("edgeless, zero-weight, no-excitation panel has mean g ln 2") {
    const double g = 2.0;
    auto c = base_config(ServiceGraph(1, {}), 20000);
    c.truth.gamma = {g};
    c.truth.beta = {0.0};
    const auto panel = simulate(c);
    double sum = 0.0;
    for (std::size_t t = 0; t < c.times; ++t) sum += static_cast<double>(panel.count(0, t));
    const double mean = sum / static_cast<double>(c.times);
    const double expected = g * std::log(2.0);
    const double se = std::sqrt(expected / static_cast<double>(c.times));
    CHECK(std::abs(mean - expected) <= 3 * se);
}

TEST_CASE("all rates zero gives an all-zero panel") {
    auto c = base_config(make_chain(3), 200);
    c.truth.gamma.assign(3, 0.0);
    c.truth.beta.assign(3, 0.0);
    c.truth.alpha.assign(2, 0.0);
    const auto panel = simulate(c);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t t = 0; t < 200; ++t) CHECK(panel.count(i, t) == 0);
}

TEST_CASE("same seed gives a bit-identical panel, different seed does not") {
    auto c = base_config(make_grid(2, 3), 300);
    c.storms.push_back({100, 20, 3.0, 0, NodeIndex{0}, 2});
    const auto a = simulate(c);
    const auto b = simulate(c);
    bool same = true;
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t t = 0; t < 300; ++t)
            same &= a.count(i, t) == b.count(i, t) && a.weather(i, t, 0) == b.weather(i, t, 0);
    CHECK(same);
    c.seed += 1;
    const auto d = simulate(c);
    bool differs = false;
    for (std::size_t t = 0; t < 300; ++t) differs |= a.weather(0, t, 0) != d.weather(0, t, 0);
    CHECK(differs);
}

TEST_CASE("storm pulses sweep outward from the origin") {
    auto c = base_config(make_grid(3, 3), 100);
    c.weather[0].noise_scale = 0.0;
    c.storms.push_back({10, 5, 4.0, 0, NodeIndex{0}, 3});
    const auto p = simulate(c);
    CHECK(p.weather(0, 10, 0) == 4.0);
    CHECK(p.weather(0, 15, 0) == 0.0);
    CHECK(p.weather(1, 12, 0) == 0.0);
    CHECK(p.weather(1, 13, 0) == 4.0);
    CHECK(p.weather(8, 22, 0) == 4.0); // four hops away
}

TEST_CASE("subcritical excitation stays bounded; supercritical trips the guard") {
    auto c = base_config(make_star(5), 3000);
    c.truth.gamma.assign(5, 1.0);
    c.truth.beta.assign(5, 1.0);
    c.truth.alpha.assign(4, 0.3);
    c.intensity_cap = 50.0;
    const auto panel = simulate(c);
    double sum = 0.0;
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t t = 0; t < 3000; ++t) sum += static_cast<double>(panel.count(i, t));
    CHECK(sum / 15000.0 < 5.0);

    // β → 0 makes the self-kernel mass β e^{-β}/(1 - e^{-β}) approach 1; adding α pushes it past 1.
    c.truth.beta.assign(5, 0.02);
    c.truth.alpha.assign(4, 3.0);
    try {
        (void)simulate(c);
        FAIL("expected ExplosiveConfig");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ExplosiveConfig);
    }
}

TEST_CASE("invalid scenarios are rejected") {
    auto c = base_config(make_star(3), 50);
    c.storms.push_back({45, 10, 1.0, 0, std::nullopt, 0});
    CHECK_THROWS_AS(validate(c), Error);
    c.storms.clear();
    c.truth.beta[0] = -1.0;
    CHECK_THROWS_AS(validate(c), Error);
}

TEST_CASE("scenario JSON") {
    const auto c = scenario_from_json(R"({
        "seed": 3, "times": 40,
        "graph": {"topology": "grid", "rows": 2, "cols": 2},
        "weather": [{"name": "wind", "ar": 0.5, "noise": 2.0}],
        "storms": [{"start": 5, "duration": 4, "amplitude": 6.0, "origin": 0, "sweep_delay": 1}],
        "truth": {"alpha": 0.2, "beta": [1, 2, 3, 4], "gamma": 0.5, "omega": 0.1, "window_d": 6,
                  "phi": {"hidden": 1, "hidden_weights": [1.0], "output_weights": [2.0]}}
    })");
    CHECK(c.graph.num_nodes() == 4);
    CHECK(c.truth.alpha.size() == 4);
    CHECK(c.truth.beta[3] == 4.0);
    CHECK(c.storms[0].origin == NodeIndex{0});
    CHECK(c.truth.window_d == 6);
    CHECK(simulate(c).times() == 40);
    CHECK_THROWS_AS((void)scenario_from_json(R"({"times": 4})"), Error);
    CHECK_THROWS_AS((void)scenario_from_json(R"({"times": 4, "graph": {"topology": "torus"}, "weather": [], "truth": {}})"),
                    Error);
}

TEST_CASE("iid generator") {
    const auto clean = simulate_iid(100, {NoiseKind::None, 0.0}, 1);
    for (std::size_t k = 0; k < 100; ++k) CHECK(clean.y[k] - iid_mean(clean.x[k]) == 0.0);

    const auto noisy = simulate_iid(5000, {NoiseKind::Gaussian, 1.0}, 2);
    std::vector<double> abs_res(5000);
    for (std::size_t k = 0; k < 5000; ++k) abs_res[k] = std::abs(noisy.y[k] - iid_mean(noisy.x[k]));
    std::sort(abs_res.begin(), abs_res.end());
    const double q90 = abs_res[static_cast<std::size_t>(std::ceil(0.9 * 5000)) - 1];
    CHECK(std::abs(q90 - 1.6448536269514722) <= 0.06);

    const auto again = simulate_iid(5000, {NoiseKind::Gaussian, 1.0}, 2);
    CHECK(again.y == noisy.y);
    CHECK(again.x == noisy.x);
}
