#pragma once

#include "graphcp/forest.hpp"
#include "graphcp/graph.hpp"
#include "graphcp/model.hpp"
#include "graphcp/panel.hpp"

#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace graphcp {

/// Interval constructions. Declaration order is the fixed tie-break order used
/// by the winner table.
enum class Method { Poisson, Vanilla, Temporal, Graph };

[[nodiscard]] std::string_view to_string(Method method) noexcept;
/// Throws UnknownMethod.
[[nodiscard]] Method method_from_string(std::string_view name);

struct Interval {
    double lower{0.0};
    double upper{0.0};
};

/// Per-node sliding window of signed residuals Y - f̂, oldest first.
class ResidualHistory {
public:
    /// Throws InsufficientHistory unless window < capacity.
    ResidualHistory(std::size_t nodes, std::size_t capacity, std::size_t window);

    void push(NodeIndex node, double residual);

    [[nodiscard]] std::size_t nodes() const noexcept { return buffers_.size(); }
    [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
    [[nodiscard]] std::size_t window() const noexcept { return window_; }
    [[nodiscard]] std::size_t size(NodeIndex node) const { return buffers_.at(node).size(); }
    [[nodiscard]] const std::deque<double>& residuals(NodeIndex node) const { return buffers_.at(node); }
    [[nodiscard]] double newest(NodeIndex node) const { return buffers_.at(node).back(); }

    /// Latest `window` residuals of a node, newest first (the QRF query vector).
    [[nodiscard]] std::vector<double> latest(NodeIndex node) const;

private:
    std::size_t capacity_;
    std::size_t window_;
    std::vector<std::deque<double>> buffers_;
};

/// Split conformal with absolute residuals: q is the ceil((1-α)(n+1))-th
/// smallest |residual|, +inf when that rank exceeds n.
[[nodiscard]] Interval vanilla_cp(std::span<const double> calibration_residuals, double alpha, double point);

/// Rows ([r_{t+ω-1}, ..., r_t] -> r_{t+ω}) pooled over `sources` in the given order.
/// Throws InsufficientHistory if any source has fewer than ω+1 residuals.
[[nodiscard]] std::pair<FeatureMatrix, std::vector<double>>
build_qrf_training_set(const ResidualHistory& history, std::span<const NodeIndex> sources);

/// [f̂ + Q̂(α/2), f̂ + Q̂(1-α/2)] from a fitted residual forest and a query window.
[[nodiscard]] Interval residual_quantile_interval(const QuantileForest& forest, std::span<const double> query,
                                                  double alpha, double point);

/// One Graph CP step for node j: fit a QRF on rows pooled over `sources`
/// (N(j), or {j} for the temporal baseline) and query with j's latest window.
[[nodiscard]] Interval graph_cp_step(NodeIndex node, const ResidualHistory& history,
                                     std::span<const NodeIndex> sources, const ForestConfig& forest, double alpha,
                                     double point);

/// Equal-tail interval [Q(α/2), Q(1-α/2)] of Poisson(λ), Q(p) = min{k : P(X ≤ k) ≥ p}.
[[nodiscard]] Interval poisson_interval(double lambda, double alpha);
[[nodiscard]] std::int64_t poisson_quantile(double lambda, double level);

struct IntervalRecord {
    Method method{Method::Graph};
    NodeIndex node{0};
    std::size_t time{0};
    double point{0.0};
    double lower{0.0};
    double upper{0.0};
    double y_true{0.0};
    friend bool operator==(const IntervalRecord&, const IntervalRecord&) = default;
};

/// Intervals ordered by (time, node) for one or more methods.
struct IntervalSeries {
    std::vector<IntervalRecord> records;
};

struct ConformalConfig {
    Method method{Method::Graph};
    double alpha{0.1};
    std::size_t window{20};
    /// Residual window capacity; the calibration length when empty.
    std::optional<std::size_t> calibration_window;
    /// Refit QRFs every this many test steps; 0 fits once.
    std::size_t retrain_stride{1};
    ForestConfig forest;
    std::uint64_t seed{0};
    /// Process nodes concurrently within a step; the output is identical either way.
    bool parallel{true};
};

/// Rolls through the test range: emit intervals for every node, then ingest
/// the observed counts and update residual histories.
[[nodiscard]] IntervalSeries run_conformal(const PanelDataset& panel, const ServiceGraph& graph,
                                           const ModelParams& params, const DataSplit& split,
                                           const ConformalConfig& config);

/// Same, reusing precomputed one-step-ahead forecasts f̂[i][t].
[[nodiscard]] IntervalSeries run_conformal(const PanelDataset& panel, const ServiceGraph& graph,
                                           const IntensityField& forecasts, const DataSplit& split,
                                           const ConformalConfig& config);

void write_intervals(std::ostream& out, const IntervalSeries& series);
void write_intervals(const std::filesystem::path& file, const IntervalSeries& series);
[[nodiscard]] IntervalSeries read_intervals(std::istream& in);
[[nodiscard]] IntervalSeries read_intervals(const std::filesystem::path& file);

} // namespace graphcp
