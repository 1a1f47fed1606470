#pragma once

#include "graphcp/conformal.hpp"
#include "graphcp/eval.hpp"
#include "graphcp/model.hpp"
#include "graphcp/synthetic.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace graphcp {

/// Everything one end-to-end run needs. All stage seeds derive from `seed`.
struct PipelineConfig {
    std::uint64_t seed{0};
    std::optional<ScenarioConfig> scenario;
    double train_fraction{0.6};
    double calibration_fraction{0.2};
    double test_fraction{0.2};
    std::size_t hidden{8};
    /// Weather window of the fitted model; the scenario truth's window when empty.
    std::optional<std::size_t> window_d;
    FitConfig fit;
    /// `method` is ignored; see `methods`.
    ConformalConfig conformal;
    std::vector<Method> methods{Method::Poisson, Method::Vanilla, Method::Temporal, Method::Graph};
    double outage_threshold{50.0};
};

/// Relative paths inside the config (the scenario file) resolve against `base_dir`.
/// Throws ConfigError on schema problems.
[[nodiscard]] PipelineConfig pipeline_config_from_json(const std::string& text,
                                                       const std::filesystem::path& base_dir);
[[nodiscard]] PipelineConfig load_pipeline_config(const std::filesystem::path& file);

/// Replaces the run seed and every stage seed derived from it.
void reseed(PipelineConfig& config, std::uint64_t seed);

using StageLog = std::function<void(std::string_view)>;

/// Files a run directory holds.
namespace run_files {
inline constexpr const char* graph = "graph.csv";
inline constexpr const char* weather = "weather.csv";
inline constexpr const char* counts = "counts.csv";
inline constexpr const char* truth = "truth.json";
inline constexpr const char* params = "params.json";
inline constexpr const char* forecast = "forecast.csv";
inline constexpr const char* metrics = "metrics.csv";
inline constexpr const char* node_metrics = "node_metrics.csv";
inline constexpr const char* violin = "violin.csv";
inline constexpr const char* winners = "winners.csv";
[[nodiscard]] std::string intervals(Method method);
} // namespace run_files

/// graph.csv, weather.csv, counts.csv and truth.json.
void stage_simulate(const ScenarioConfig& scenario, const std::filesystem::path& dir, const StageLog& log = {});
/// params.json, fitted on the train range.
void stage_fit(const PipelineConfig& config, const std::filesystem::path& dir, const StageLog& log = {});
/// forecast.csv with one-step-ahead intensities "unit,time,lambda" over the whole panel.
void stage_predict(const PipelineConfig& config, const std::filesystem::path& dir, const StageLog& log = {});
/// intervals_<method>.csv over the test range.
void stage_conformal(const PipelineConfig& config, Method method, const std::filesystem::path& dir,
                     const StageLog& log = {});
/// metrics.csv, node_metrics.csv, violin.csv and, with two or more methods and
/// an eligible node, winners.csv. Returns the per-method reports.
std::vector<MethodReport> stage_evaluate(const PipelineConfig& config, std::span<const Method> methods,
                                         const std::filesystem::path& dir, const StageLog& log = {});
/// Plain-text summary of metrics.csv and winners.csv.
[[nodiscard]] std::string stage_report(const std::filesystem::path& dir);

/// simulate -> fit -> predict -> conformal (each method) -> evaluate.
void run_pipeline(const PipelineConfig& config, const std::filesystem::path& dir, const StageLog& log = {});

} // namespace graphcp
