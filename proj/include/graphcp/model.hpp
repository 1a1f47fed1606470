#pragma once

#include "graphcp/graph.hpp"
#include "graphcp/panel.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace graphcp {

/// Lower clamp on every intensity so that log λ stays finite.
inline constexpr double kIntensityFloor = 1e-8;

[[nodiscard]] inline double softplus(double x) noexcept {
    return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
[[nodiscard]] inline double sigmoid(double x) noexcept {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
/// Inverse of softplus on (0, inf); zero maps to a large negative finite value.
[[nodiscard]] double softplus_inverse(double y) noexcept;

/// Weights of the nonnegative weather response μ(v) = softplus(w2 · tanh(W1 v + b1) + b2).
struct ResponseWeights {
    std::size_t hidden{0};
    std::size_t inputs{0};
    std::vector<double> hidden_weights; // hidden x inputs, row-major
    std::vector<double> hidden_bias;    // hidden
    std::vector<double> output_weights; // hidden
    double output_bias{0.0};

    [[nodiscard]] static ResponseWeights zeros(std::size_t hidden, std::size_t inputs);
    [[nodiscard]] std::size_t parameter_count() const noexcept { return hidden * (inputs + 2) + 1; }
    friend bool operator==(const ResponseWeights&, const ResponseWeights&) = default;
};

/// μ(v; φ) >= 0. Throws DimensionMismatch if v.size() != phi.inputs.
[[nodiscard]] double mu(std::span<const double> v, const ResponseWeights& phi);

/// Model parameters in their natural (constrained) units.
/// The diagonal α_ii = 1 is implicit and never stored.
struct ModelParams {
    std::vector<std::pair<NodeIndex, NodeIndex>> alpha_edges; // (target, source), aligned with graph edges
    std::vector<double> alpha;                                // >= 0
    std::vector<double> beta;                                 // per node, >= 0
    std::vector<double> gamma;                                // per node, >= 0
    std::vector<double> omega;                                // per weather variable, >= 0
    ResponseWeights phi;
    std::size_t window_d{96};
    std::uint64_t seed{0};

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Starting point for fitting: uniform rates plus small seeded φ weights.
[[nodiscard]] ModelParams default_params(const ServiceGraph& graph, std::size_t variables, std::size_t hidden = 8,
                                         std::size_t window_d = 96, std::uint64_t seed = 0);

/// Throws DimensionMismatch unless params agree with the graph and panel shapes.
void check_compatible(const ModelParams& params, const ServiceGraph& graph, std::size_t variables);

/// Layout of the unconstrained coordinate vector used by the optimizer:
/// [softplus^-1 α (edges) | softplus^-1 β (K) | softplus^-1 γ (K) | softplus^-1 ω (M) | φ].
/// φ is stored as W1 (row-major), b1, w2, b2.
struct ParameterLayout {
    std::size_t edges{0};
    std::size_t nodes{0};
    std::size_t variables{0};
    std::size_t hidden{0};

    explicit ParameterLayout(const ModelParams& params)
        : edges(params.alpha.size()), nodes(params.beta.size()), variables(params.omega.size()),
          hidden(params.phi.hidden) {}

    [[nodiscard]] std::size_t alpha() const noexcept { return 0; }
    [[nodiscard]] std::size_t beta() const noexcept { return edges; }
    [[nodiscard]] std::size_t gamma() const noexcept { return beta() + nodes; }
    [[nodiscard]] std::size_t omega() const noexcept { return gamma() + nodes; }
    [[nodiscard]] std::size_t hidden_weights() const noexcept { return omega() + variables; }
    [[nodiscard]] std::size_t hidden_bias() const noexcept { return hidden_weights() + hidden * variables; }
    [[nodiscard]] std::size_t output_weights() const noexcept { return hidden_bias() + hidden; }
    [[nodiscard]] std::size_t output_bias() const noexcept { return output_weights() + hidden; }
    [[nodiscard]] std::size_t size() const noexcept { return output_bias() + 1; }
};

[[nodiscard]] std::vector<double> to_unconstrained(const ModelParams& params);
/// Inverse of to_unconstrained; `like` supplies the shapes and non-numeric fields.
[[nodiscard]] ModelParams from_unconstrained(std::span<const double> coords, const ModelParams& like);

/// Dense [unit][time][variable] tensor.
struct WeatherEffects {
    std::size_t units{0};
    std::size_t times{0};
    std::size_t variables{0};
    std::vector<double> values;

    [[nodiscard]] double at(std::size_t i, std::size_t t, std::size_t m) const {
        return values[(i * times + t) * variables + m];
    }
    [[nodiscard]] std::span<const double> vector(std::size_t i, std::size_t t) const {
        return std::span<const double>(values).subspan((i * times + t) * variables, variables);
    }
};

/// v[i][t][m] = sum over tau in [t-d+1, t] (tau >= 0) of x[i][tau][m] exp(-omega_m (t - tau)).
[[nodiscard]] WeatherEffects cumulative_weather(const PanelDataset& panel, std::span<const double> omega,
                                                std::size_t window_d);

/// S_j(t) for every node j, where S_j(0) = 0 and
/// S_j(t) = exp(-beta_j) (S_j(t-1) + beta_j N_{j,t-1}).
[[nodiscard]] std::vector<double> excitation_recursion(const PanelDataset& panel, std::span<const double> beta,
                                                       std::size_t t);

/// λ_{·t}: weather term plus graph-coupled excitation, floored at kIntensityFloor.
[[nodiscard]] std::vector<double> intensity(const PanelDataset& panel, const ServiceGraph& graph,
                                            const ModelParams& params, std::size_t t);

/// λ over all units and times, row-major [unit][time].
struct IntensityField {
    std::size_t units{0};
    std::size_t times{0};
    std::vector<double> lambda;
    [[nodiscard]] double at(std::size_t i, std::size_t t) const { return lambda[i * times + t]; }
};

[[nodiscard]] IntensityField intensity_field(const PanelDataset& panel, const ServiceGraph& graph,
                                             const ModelParams& params);

/// ℓ = -Σ_{t in range} Σ_i (λ_it - N_it log λ_it).
[[nodiscard]] double log_likelihood(const PanelDataset& panel, const ServiceGraph& graph, const ModelParams& params,
                                    TimeRange range);

/// ∂ℓ/∂u in the unconstrained coordinates described by ParameterLayout.
[[nodiscard]] std::vector<double> gradient(const PanelDataset& panel, const ServiceGraph& graph,
                                           const ModelParams& params, TimeRange range);

struct FitConfig {
    double learning_rate{1e-2};
    double momentum{0.0};
    std::size_t epochs{200};
    std::size_t block_length{64};
    std::uint64_t seed{0};
    /// Allowed likelihood decrease between accepted checkpoints.
    double tolerance{1e-8};
};

struct FitResult {
    ModelParams params;
    /// ℓ on the training range at every accepted checkpoint, starting with the initial point.
    std::vector<double> checkpoints;
    std::size_t rejected_epochs{0};
};

/// Mini-batch gradient ascent over shuffled contiguous time blocks.
/// Each epoch ends with a full-range checkpoint; an epoch that lowers ℓ is
/// rolled back and the learning rate halved. Throws NonFiniteLoss on divergence.
[[nodiscard]] FitResult fit(const PanelDataset& panel, const ServiceGraph& graph, const ModelParams& init,
                            const FitConfig& config, TimeRange train);

/// One-step-ahead point forecast f̂[·][t] = λ_{·t} from the observed history.
[[nodiscard]] inline std::vector<double> predict(const PanelDataset& panel, const ServiceGraph& graph,
                                                 const ModelParams& params, std::size_t t) {
    return intensity(panel, graph, params, t);
}

[[nodiscard]] std::string params_to_json(const ModelParams& params);
[[nodiscard]] ModelParams params_from_json(const std::string& text);
void save_params(const std::filesystem::path& file, const ModelParams& params);
[[nodiscard]] ModelParams load_params(const std::filesystem::path& file);

} // namespace graphcp
