#pragma once

#include "graphcp/graph.hpp"
#include "graphcp/model.hpp"
#include "graphcp/panel.hpp"
#include "graphcp/random.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace graphcp {

/// Per-variable AR(1) weather: x_t = mean + a (x_{t-1} - mean) + noise_scale * e_t.
struct WeatherProcess {
    std::string name{"x"};
    double mean{0.0};
    double ar_coefficient{0.8};
    double noise_scale{1.0};
};

/// Additive pulse on one weather variable over [start, start + duration).
/// With an origin node the pulse reaches node i after sweep_delay * hops(origin, i)
/// steps (hops along undirected edges; unreachable nodes are untouched).
struct StormPulse {
    std::size_t start{0};
    std::size_t duration{1};
    double amplitude{0.0};
    std::size_t variable{0};
    std::optional<NodeIndex> origin;
    std::size_t sweep_delay{0};
};

struct ScenarioConfig {
    ServiceGraph graph;
    std::size_t times{0};
    std::vector<WeatherProcess> weather;
    std::vector<StormPulse> storms;
    ModelParams truth;
    /// Running mean of λ above which the excitation is treated as explosive.
    double intensity_cap{1e4};
    std::uint64_t seed{0};
};

/// Throws ConfigError on invalid shapes, negative rates or out-of-range pulses.
void validate(const ScenarioConfig& config);

/// Forward simulation: weather first, then counts sequentially in t with
/// N_it ~ Poisson(λ_it) computed from the already-sampled history.
/// Throws ExplosiveConfig when the running mean of λ exceeds the cap.
[[nodiscard]] PanelDataset simulate(const ScenarioConfig& config);

/// Parses the scenario JSON (see README for the schema).
[[nodiscard]] ScenarioConfig scenario_from_json(const std::string& text);
[[nodiscard]] ScenarioConfig load_scenario(const std::filesystem::path& file);

enum class NoiseKind { None, Gaussian, Laplace };

struct NoiseSpec {
    NoiseKind kind{NoiseKind::Gaussian};
    double scale{1.0};
};

/// Exchangeable regression data: x ~ U(-3, 3), y = iid_mean(x) + noise.
struct IidSample {
    std::vector<double> x;
    std::vector<double> y;
};

[[nodiscard]] double iid_mean(double x) noexcept;
[[nodiscard]] IidSample simulate_iid(std::size_t n, NoiseSpec noise, std::uint64_t seed);

} // namespace graphcp
