#pragma once

// Independent reference computations used only by tests. These follow the
// model's formulas literally (double sums, direct definitions) and share no
// code with the library's kernels.

#include "graphcp/graph.hpp"
#include "graphcp/model.hpp"
#include "graphcp/panel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

inline double softplus(double x) { return std::log(1.0 + std::exp(x)); }

inline double mu(const std::vector<double>& v, const graphcp::ResponseWeights& phi) {
    double out = phi.output_bias;
    for (std::size_t k = 0; k < phi.hidden; ++k) {
        double z = phi.hidden_bias[k];
        for (std::size_t m = 0; m < phi.inputs; ++m) z += phi.hidden_weights[k * phi.inputs + m] * v[m];
        out += phi.output_weights[k] * std::tanh(z);
    }
    return softplus(out);
}

/// Σ_{τ=t-d+1}^{t} x_τ e^{-ω(t-τ)}, τ >= 0.
inline double cumulative_weather(const graphcp::PanelDataset& p, std::size_t i, std::size_t t, std::size_t m,
                                 double omega, std::size_t d) {
    double acc = 0.0;
    for (long tau = static_cast<long>(t) - static_cast<long>(d) + 1; tau <= static_cast<long>(t); ++tau) {
        if (tau < 0) continue;
        acc += p.weather(i, static_cast<std::size_t>(tau), m) * std::exp(-omega * static_cast<double>(t - tau));
    }
    return acc;
}

/// Σ_{t'<t} Σ_{j ∈ N(i)} g(i,j,t,t') with g = α_ij N_{jt'} β_j e^{-β_j (t-t')}, α_ii = 1.
inline double excitation_double_sum(const graphcp::PanelDataset& p, const graphcp::ServiceGraph& g,
                                    const graphcp::ModelParams& params, std::size_t i, std::size_t t) {
    double acc = 0.0;
    auto add_source = [&](std::size_t j, double alpha) {
        for (std::size_t tp = 0; tp < t; ++tp)
            acc += alpha * static_cast<double>(p.count(j, tp)) * params.beta[j] *
                   std::exp(-params.beta[j] * static_cast<double>(t - tp));
    };
    add_source(i, 1.0);
    const auto edges = g.edges();
    for (std::size_t e = 0; e < edges.size(); ++e)
        if (edges[e].target == i) add_source(edges[e].source, params.alpha[e]);
    return acc;
}

inline double intensity(const graphcp::PanelDataset& p, const graphcp::ServiceGraph& g,
                        const graphcp::ModelParams& params, std::size_t i, std::size_t t) {
    std::vector<double> v(p.variables());
    for (std::size_t m = 0; m < v.size(); ++m)
        v[m] = cumulative_weather(p, i, t, m, params.omega[m], params.window_d);
    const double raw = params.gamma[i] * mu(v, params.phi) + excitation_double_sum(p, g, params, i, t);
    return std::max(raw, graphcp::kIntensityFloor);
}

inline double log_likelihood(const graphcp::PanelDataset& p, const graphcp::ServiceGraph& g,
                             const graphcp::ModelParams& params, graphcp::TimeRange r) {
    double ll = 0.0;
    for (std::size_t t = r.begin; t < r.end; ++t)
        for (std::size_t i = 0; i < p.units(); ++i) {
            const double lambda = intensity(p, g, params, i, t);
            ll -= lambda - static_cast<double>(p.count(i, t)) * std::log(lambda);
        }
    return ll;
}

/// Smallest k with P(X <= k) >= level for X ~ Poisson(lambda), by summing the pmf.
inline long poisson_quantile(double lambda, double level) {
    double pmf = std::exp(-lambda);
    double cdf = pmf;
    long k = 0;
    while (cdf < level) {
        ++k;
        pmf *= lambda / static_cast<double>(k);
        cdf += pmf;
    }
    return k;
}

/// Random antisymmetric graph over k nodes.
inline graphcp::ServiceGraph random_graph(std::size_t k, std::mt19937_64& rng) {
    std::vector<graphcp::Edge> edges;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            const auto r = rng() % 3;
            if (r == 1) edges.push_back({i, j, 1.0});
            if (r == 2) edges.push_back({j, i, 1.0});
        }
    return graphcp::ServiceGraph(k, std::move(edges));
}

inline graphcp::PanelDataset random_panel(std::size_t k, std::size_t t, std::size_t m, std::mt19937_64& rng) {
    std::vector<std::string> names;
    for (std::size_t v = 0; v < m; ++v) names.push_back("x" + std::to_string(v));
    graphcp::PanelDataset p(k, t, names);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t s = 0; s < t; ++s) {
            p.count(i, s) = static_cast<std::int64_t>(rng() % 6);
            for (std::size_t v = 0; v < m; ++v) p.weather(i, s, v) = normal(rng);
        }
    return p;
}

inline graphcp::ModelParams random_params(const graphcp::ServiceGraph& g, std::size_t m, std::size_t hidden,
                                          std::size_t window, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 0.7);
    auto p = graphcp::default_params(g, m, hidden, window, 0);
    for (auto& a : p.alpha) a = 0.05 + 0.5 * u(rng);
    for (auto& b : p.beta) b = 0.2 + 1.8 * u(rng);
    for (auto& c : p.gamma) c = 0.2 + 1.8 * u(rng);
    for (auto& w : p.omega) w = 0.05 + u(rng);
    for (auto& w : p.phi.hidden_weights) w = normal(rng);
    for (auto& w : p.phi.hidden_bias) w = normal(rng);
    for (auto& w : p.phi.output_weights) w = normal(rng);
    p.phi.output_bias = normal(rng);
    return p;
}

} // namespace oracle
