#pragma once

// Likelihood/gradient kernels. `serial` is the straightforward time-major
// reference; `parallel` splits work over units with OpenMP and reduces
// per-unit partials in unit order, so its result does not depend on the
// thread count. The two agree to rounding.

#include "graphcp/model.hpp"

#include <vector>

namespace graphcp::kernels {

struct LikelihoodTerms {
    double log_likelihood{0.0};
    std::vector<double> gradient; // empty unless requested
};

namespace serial {
[[nodiscard]] WeatherEffects cumulative_weather(const PanelDataset& panel, std::span<const double> omega,
                                                std::size_t window_d);
[[nodiscard]] LikelihoodTerms evaluate(const PanelDataset& panel, const ServiceGraph& graph,
                                       const ModelParams& params, TimeRange range, bool with_gradient);
} // namespace serial

namespace parallel {
[[nodiscard]] WeatherEffects cumulative_weather(const PanelDataset& panel, std::span<const double> omega,
                                                std::size_t window_d);
[[nodiscard]] LikelihoodTerms evaluate(const PanelDataset& panel, const ServiceGraph& graph,
                                       const ModelParams& params, TimeRange range, bool with_gradient);
} // namespace parallel

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
[[nodiscard]] int max_threads() noexcept;

} // namespace graphcp::kernels
