#pragma once

#include "graphcp/conformal.hpp"
#include "graphcp/panel.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace graphcp {

struct NodeMetrics {
    NodeIndex node{0};
    std::size_t cells{0};
    double coverage{0.0};
    /// Mean over finite intervals; +inf if every interval was infinite.
    double mean_width{0.0};
    std::size_t infinite_intervals{0};
    double mean_outage{0.0};
    friend bool operator==(const NodeMetrics&, const NodeMetrics&) = default;
};

struct MethodReport {
    std::string method;
    std::size_t cells{0};
    double coverage{0.0};
    /// P(y > 0 and covered) over all test cells.
    double nonzero_coverage{0.0};
    /// Mean over finite intervals; +inf if every interval was infinite.
    double mean_width{0.0};
    std::size_t infinite_intervals{0};
    /// Ordered by node index.
    std::vector<NodeMetrics> nodes;
    friend bool operator==(const MethodReport&, const MethodReport&) = default;
};

/// Metrics of a single-method series. The series must hold exactly one record
/// per (time, node) of `test`, ordered by (time, node), with y_true equal to
/// the panel count. Throws AlignmentError otherwise.
[[nodiscard]] MethodReport coverage_metrics(const IntervalSeries& series, const PanelDataset& truths,
                                            const TimeRange& test);

/// Metrics from the records alone (y_true as truth). Throws AlignmentError on
/// mixed methods or duplicate (node, time) cells.
[[nodiscard]] MethodReport coverage_metrics(const IntervalSeries& series);

/// Splits a multi-method series by method, keeping record order.
[[nodiscard]] std::vector<IntervalSeries> split_by_method(const IntervalSeries& series);

struct WinnerTable {
    /// Methods in tie-break order.
    std::vector<std::string> methods;
    std::vector<std::size_t> wins;
    std::vector<double> fractions;
    std::size_t eligible_nodes{0};
    double target_coverage{0.0};
    double outage_threshold{0.0};
};

/// Tie-break rank: poisson < vanilla < temporal < graph, then unknown names lexicographically.
[[nodiscard]] bool method_precedes(const std::string& a, const std::string& b);

/// Per node with mean outage above the threshold: the sole method reaching
/// 1 - alpha wins; among several achievers the narrowest wins; with none, the
/// highest coverage wins. Remaining ties go to the narrower width, then the
/// method order. Throws ConfigError with fewer than two methods or mismatched
/// node sets, NoEligibleNodes when no node passes the threshold.
[[nodiscard]] WinnerTable winner_table(std::span<const MethodReport> reports, double alpha,
                                       double outage_threshold = 50.0);

/// Long-format "method,node,coverage". Throws DegenerateData on empty input.
void violin_export(std::ostream& out, std::span<const MethodReport> reports);

void write_reports(std::ostream& out, std::span<const MethodReport> reports);
void write_winner_table(std::ostream& out, const WinnerTable& table);
/// "method,node,cells,coverage,mean_width,infinite_intervals,mean_outage".
void write_node_metrics(std::ostream& out, std::span<const MethodReport> reports);
void write_node_metrics(const std::filesystem::path& file, std::span<const MethodReport> reports);
void write_reports(const std::filesystem::path& file, std::span<const MethodReport> reports);
void write_winner_table(const std::filesystem::path& file, const WinnerTable& table);
void violin_export(const std::filesystem::path& file, std::span<const MethodReport> reports);

} // namespace graphcp
