#include "graphcp/kernels.hpp"

#include "model_internal.hpp"

#include <algorithm>
#include <cmath>

namespace graphcp::kernels::serial {

WeatherEffects cumulative_weather(const PanelDataset& panel, std::span<const double> omega, std::size_t window_d) {
    WeatherEffects out{panel.units(), panel.times(), panel.variables(), {}};
    out.values.assign(out.units * out.times * out.variables, 0.0);
    for (std::size_t i = 0; i < out.units; ++i)
        for (std::size_t t = 0; t < out.times; ++t)
            for (std::size_t m = 0; m < out.variables; ++m) {
                double acc = 0.0;
                const std::size_t first = t + 1 >= window_d ? t + 1 - window_d : 0;
                for (std::size_t tau = first; tau <= t; ++tau)
                    acc += panel.weather(i, tau, m) * std::exp(-omega[m] * static_cast<double>(t - tau));
                out.values[(i * out.times + t) * out.variables + m] = acc;
            }
    return out;
}

// Time-major reference: walks t forward once, carrying S and dS/dβ for every
// node, and evaluates every cell with direct sums.
LikelihoodTerms evaluate(const PanelDataset& panel, const ServiceGraph& graph, const ModelParams& params,
                         TimeRange range, bool with_gradient) {
    check_compatible(params, graph, panel.variables());
    const std::size_t K = panel.units();
    const std::size_t M = panel.variables();
    const std::size_t d = params.window_d;
    const ParameterLayout layout(params);

    LikelihoodTerms out;
    if (with_gradient) out.gradient.assign(layout.size(), 0.0);

    std::vector<double> s(K, 0.0), ds(K, 0.0);
    std::vector<double> v(M), dv(M), hidden(params.phi.hidden), dmu_dv(M);
    const auto edges = graph.edges();

    for (std::size_t t = 0; t < range.end; ++t) {
        if (t > 0) {
            for (std::size_t j = 0; j < K; ++j) {
                const double b = params.beta[j];
                const double decay = std::exp(-b);
                const auto n = static_cast<double>(panel.count(j, t - 1));
                const double next = decay * (s[j] + b * n);
                ds[j] = -next + decay * (ds[j] + n);
                s[j] = next;
            }
        }
        if (t < range.begin) continue;

        for (std::size_t i = 0; i < K; ++i) {
            for (std::size_t m = 0; m < M; ++m) {
                v[m] = 0.0;
                dv[m] = 0.0;
                const std::size_t first = t + 1 >= d ? t + 1 - d : 0;
                for (std::size_t tau = first; tau <= t; ++tau) {
                    const double lag = static_cast<double>(t - tau);
                    const double term = panel.weather(i, tau, m) * std::exp(-params.omega[m] * lag);
                    v[m] += term;
                    dv[m] -= lag * term;
                }
            }
            double dmu_dout = 0.0;
            const double mu_value = detail::mu_forward(v, params.phi, hidden, dmu_dout);

            double raw = params.gamma[i] * mu_value + s[i];
            for (std::size_t e = 0; e < edges.size(); ++e)
                if (edges[e].target == i) raw += params.alpha[e] * s[edges[e].source];

            const auto n = static_cast<double>(panel.count(i, t));
            const double lambda = std::max(raw, kIntensityFloor);
            out.log_likelihood -= lambda - n * std::log(lambda);

            if (!with_gradient || raw < kIntensityFloor) continue;
            const double c = n / lambda - 1.0;
            auto& g = out.gradient;
            g[layout.gamma() + i] += c * mu_value * detail::chain_factor(params.gamma[i]);
            g[layout.beta() + i] += c * ds[i] * detail::chain_factor(params.beta[i]);
            for (std::size_t e = 0; e < edges.size(); ++e) {
                if (edges[e].target != i) continue;
                const auto j = edges[e].source;
                g[layout.alpha() + e] += c * s[j] * detail::chain_factor(params.alpha[e]);
                g[layout.beta() + j] += c * params.alpha[e] * ds[j] * detail::chain_factor(params.beta[j]);
            }
            detail::mu_backward(v, params.phi, hidden, dmu_dout, c * params.gamma[i], layout, g, dmu_dv);
            for (std::size_t m = 0; m < M; ++m)
                g[layout.omega() + m] +=
                    c * params.gamma[i] * dmu_dv[m] * dv[m] * detail::chain_factor(params.omega[m]);
        }
    }
    return out;
}

} // namespace graphcp::kernels::serial
