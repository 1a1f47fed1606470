#pragma once

// Shared building blocks for the model kernels. Not part of the public API.

#include "graphcp/model.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace graphcp::detail {

/// Forward pass of μ that keeps the hidden activations for the backward pass.
/// Returns μ and writes dμ/d(output pre-activation) to `dmu_dout`.
inline double mu_forward(std::span<const double> v, const ResponseWeights& phi, std::span<double> hidden,
                         double& dmu_dout) {
    double out = phi.output_bias;
    for (std::size_t k = 0; k < phi.hidden; ++k) {
        double z = phi.hidden_bias[k];
        const double* w = phi.hidden_weights.data() + k * phi.inputs;
        for (std::size_t m = 0; m < phi.inputs; ++m) z += w[m] * v[m];
        hidden[k] = std::tanh(z);
        out += phi.output_weights[k] * hidden[k];
    }
    dmu_dout = sigmoid(out);
    return softplus(out);
}

/// Adds scale * dμ/dφ into grad (at the φ offsets of `layout`) and returns
/// dμ/dv into `dmu_dv`.
inline void mu_backward(std::span<const double> v, const ResponseWeights& phi, std::span<const double> hidden,
                        double dmu_dout, double scale, const ParameterLayout& layout, std::span<double> grad,
                        std::span<double> dmu_dv) {
    for (std::size_t m = 0; m < phi.inputs; ++m) dmu_dv[m] = 0.0;
    const double s = dmu_dout;
    grad[layout.output_bias()] += scale * s;
    for (std::size_t k = 0; k < phi.hidden; ++k) {
        grad[layout.output_weights() + k] += scale * s * hidden[k];
        const double dz = s * phi.output_weights[k] * (1.0 - hidden[k] * hidden[k]);
        grad[layout.hidden_bias() + k] += scale * dz;
        const double* w = phi.hidden_weights.data() + k * phi.inputs;
        for (std::size_t m = 0; m < phi.inputs; ++m) {
            grad[layout.hidden_weights() + k * phi.inputs + m] += scale * dz * v[m];
            dmu_dv[m] += dz * w[m];
        }
    }
}

/// d softplus(u) / du expressed through the constrained value softplus(u).
inline double chain_factor(double value) noexcept { return -std::expm1(-value); }

/// Excitation accumulators S_j(t) and dS_j(t)/dβ_j for t in [0, end), row-major [node][time].
struct ExcitationSeries {
    std::size_t times{0};
    std::vector<double> s;
    std::vector<double> ds;
    [[nodiscard]] double at(std::size_t j, std::size_t t) const { return s[j * times + t]; }
    [[nodiscard]] double d_at(std::size_t j, std::size_t t) const { return ds[j * times + t]; }
};

/// One-node recursion; S(0) = 0, S(t) = e^{-β}(S(t-1) + β N(t-1)),
/// D(t) = -S(t) + e^{-β}(D(t-1) + N(t-1)).
inline void excitation_row(const PanelDataset& panel, std::size_t j, double beta, std::size_t end, double* s,
                           double* ds) {
    const double decay = std::exp(-beta);
    double cur = 0.0;
    double dcur = 0.0;
    for (std::size_t t = 0; t < end; ++t) {
        if (t > 0) {
            const auto n = static_cast<double>(panel.count(j, t - 1));
            const double next = decay * (cur + beta * n);
            dcur = -next + decay * (dcur + n);
            cur = next;
        }
        s[t] = cur;
        if (ds != nullptr) ds[t] = dcur;
    }
}

ExcitationSeries excitation_series(const PanelDataset& panel, std::span<const double> beta, std::size_t end,
                                   bool with_derivative);

/// Cumulative weather restricted to t in [begin, end), optionally with dv/dω.
/// Indexing of the returned tensors is [unit][t - begin][variable].
struct WindowedWeather {
    std::size_t begin{0};
    std::size_t length{0};
    std::size_t variables{0};
    std::vector<double> v;
    std::vector<double> dv;
    [[nodiscard]] std::span<const double> at(std::size_t i, std::size_t t) const {
        return std::span<const double>(v).subspan((i * length + (t - begin)) * variables, variables);
    }
    [[nodiscard]] std::span<const double> d_at(std::size_t i, std::size_t t) const {
        return std::span<const double>(dv).subspan((i * length + (t - begin)) * variables, variables);
    }
};

WindowedWeather windowed_weather(const PanelDataset& panel, std::span<const double> omega, std::size_t window_d,
                                 std::size_t begin, std::size_t end, bool with_derivative);

} // namespace graphcp::detail
