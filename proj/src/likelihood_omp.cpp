#include "graphcp/kernels.hpp"

#include "model_internal.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace graphcp {

namespace detail {

ExcitationSeries excitation_series(const PanelDataset& panel, std::span<const double> beta, std::size_t end,
                                   bool with_derivative) {
    const auto K = static_cast<std::ptrdiff_t>(panel.units());
    ExcitationSeries out;
    out.times = end;
    out.s.assign(panel.units() * end, 0.0);
    if (with_derivative) out.ds.assign(panel.units() * end, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < K; ++j) {
        const auto row = static_cast<std::size_t>(j) * end;
        excitation_row(panel, static_cast<std::size_t>(j), beta[static_cast<std::size_t>(j)], end,
                       out.s.data() + row, with_derivative ? out.ds.data() + row : nullptr);
    }
    return out;
}

WindowedWeather windowed_weather(const PanelDataset& panel, std::span<const double> omega, std::size_t window_d,
                                 std::size_t begin, std::size_t end, bool with_derivative) {
    WindowedWeather out{begin, end - begin, panel.variables(), {}, {}};
    const std::size_t M = panel.variables();
    out.v.assign(panel.units() * out.length * M, 0.0);
    if (with_derivative) out.dv.assign(out.v.size(), 0.0);

    // Decay factors by lag, shared across units.
    std::vector<double> decay(window_d * M);
    for (std::size_t lag = 0; lag < window_d; ++lag)
        for (std::size_t m = 0; m < M; ++m) decay[lag * M + m] = std::exp(-omega[m] * static_cast<double>(lag));

    const auto K = static_cast<std::ptrdiff_t>(panel.units());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < K; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        for (std::size_t t = begin; t < end; ++t) {
            const std::size_t first = t + 1 >= window_d ? t + 1 - window_d : 0;
            double* v = out.v.data() + (i * out.length + (t - begin)) * M;
            double* dv = with_derivative ? out.dv.data() + (i * out.length + (t - begin)) * M : nullptr;
            for (std::size_t tau = first; tau <= t; ++tau) {
                const std::size_t lag = t - tau;
                for (std::size_t m = 0; m < M; ++m) {
                    const double term = panel.weather(i, tau, m) * decay[lag * M + m];
                    v[m] += term;
                    if (dv != nullptr) dv[m] -= static_cast<double>(lag) * term;
                }
            }
        }
    }
    return out;
}

} // namespace detail

namespace kernels {

int max_threads() noexcept {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace parallel {

WeatherEffects cumulative_weather(const PanelDataset& panel, std::span<const double> omega, std::size_t window_d) {
    auto windowed = detail::windowed_weather(panel, omega, window_d, 0, panel.times(), false);
    return {panel.units(), panel.times(), panel.variables(), std::move(windowed.v)};
}

LikelihoodTerms evaluate(const PanelDataset& panel, const ServiceGraph& graph, const ModelParams& params,
                         TimeRange range, bool with_gradient) {
    check_compatible(params, graph, panel.variables());
    const std::size_t K = panel.units();
    const std::size_t M = panel.variables();
    const ParameterLayout layout(params);
    const std::size_t P = layout.size();

    const auto excitation = detail::excitation_series(panel, params.beta, range.end, with_gradient);
    const auto weather =
        detail::windowed_weather(panel, params.omega, params.window_d, range.begin, range.end, with_gradient);

    std::vector<double> unit_ll(K, 0.0);
    std::vector<double> unit_grad(with_gradient ? K * P : 0, 0.0);

#pragma omp parallel
    {
        std::vector<double> hidden(params.phi.hidden), dmu_dv(M);
#pragma omp for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(K); ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            const auto incoming = graph.incoming_edges(i);
            const auto edges = graph.edges();
            std::span<double> g;
            if (with_gradient) g = std::span<double>(unit_grad).subspan(i * P, P);
            double ll = 0.0;
            for (std::size_t t = range.begin; t < range.end; ++t) {
                const auto v = weather.at(i, t);
                double dmu_dout = 0.0;
                const double mu_value = detail::mu_forward(v, params.phi, hidden, dmu_dout);
                double raw = params.gamma[i] * mu_value + excitation.at(i, t);
                for (auto e : incoming) raw += params.alpha[e] * excitation.at(edges[e].source, t);

                const auto n = static_cast<double>(panel.count(i, t));
                const double lambda = std::max(raw, kIntensityFloor);
                ll -= lambda - n * std::log(lambda);

                if (!with_gradient || raw < kIntensityFloor) continue;
                const double c = n / lambda - 1.0;
                g[layout.gamma() + i] += c * mu_value;
                g[layout.beta() + i] += c * excitation.d_at(i, t);
                for (auto e : incoming) {
                    const auto j = edges[e].source;
                    g[layout.alpha() + e] += c * excitation.at(j, t);
                    g[layout.beta() + j] += c * params.alpha[e] * excitation.d_at(j, t);
                }
                detail::mu_backward(v, params.phi, hidden, dmu_dout, c * params.gamma[i], layout, g, dmu_dv);
                const auto dv = weather.d_at(i, t);
                for (std::size_t m = 0; m < M; ++m) g[layout.omega() + m] += c * params.gamma[i] * dmu_dv[m] * dv[m];
            }
            unit_ll[i] = ll;
        }
    }

    LikelihoodTerms out;
    for (std::size_t i = 0; i < K; ++i) out.log_likelihood += unit_ll[i];
    if (!with_gradient) return out;

    out.gradient.assign(P, 0.0);
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t p = 0; p < P; ++p) out.gradient[p] += unit_grad[i * P + p];
    // Chain through softplus for the constrained blocks.
    for (std::size_t e = 0; e < layout.edges; ++e) out.gradient[layout.alpha() + e] *= detail::chain_factor(params.alpha[e]);
    for (std::size_t j = 0; j < K; ++j) {
        out.gradient[layout.beta() + j] *= detail::chain_factor(params.beta[j]);
        out.gradient[layout.gamma() + j] *= detail::chain_factor(params.gamma[j]);
    }
    for (std::size_t m = 0; m < M; ++m) out.gradient[layout.omega() + m] *= detail::chain_factor(params.omega[m]);
    return out;
}

} // namespace parallel
} // namespace kernels
} // namespace graphcp
