#include "graphcp/conformal.hpp"

#include "csv.hpp"
#include "graphcp/error.hpp"
#include "graphcp/random.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace graphcp {

std::string_view to_string(Method method) noexcept {
    switch (method) {
    case Method::Poisson: return "poisson";
    case Method::Vanilla: return "vanilla";
    case Method::Temporal: return "temporal";
    case Method::Graph: return "graph";
    }
    return "unknown";
}

Method method_from_string(std::string_view name) {
    for (auto m : {Method::Poisson, Method::Vanilla, Method::Temporal, Method::Graph})
        if (to_string(m) == name) return m;
    throw Error(ErrorKind::UnknownMethod, "'" + std::string(name) + "' (expected poisson, vanilla, temporal or graph)");
}

ResidualHistory::ResidualHistory(std::size_t nodes, std::size_t capacity, std::size_t window)
    : capacity_(capacity), window_(window), buffers_(nodes) {
    if (window == 0) throw Error(ErrorKind::InsufficientHistory, "window must be at least 1");
    if (window >= capacity)
        throw Error(ErrorKind::InsufficientHistory, "window " + std::to_string(window) +
                                                        " must be smaller than the calibration window " +
                                                        std::to_string(capacity));
}

void ResidualHistory::push(NodeIndex node, double residual) {
    auto& buf = buffers_.at(node);
    buf.push_back(residual);
    if (buf.size() > capacity_) buf.pop_front();
}

std::vector<double> ResidualHistory::latest(NodeIndex node) const {
    const auto& buf = buffers_.at(node);
    if (buf.size() < window_)
        throw Error(ErrorKind::InsufficientHistory, "node " + std::to_string(node) + " has " +
                                                        std::to_string(buf.size()) + " residuals, window is " +
                                                        std::to_string(window_));
    return std::vector<double>(buf.rbegin(), buf.rbegin() + static_cast<std::ptrdiff_t>(window_));
}

Interval vanilla_cp(std::span<const double> calibration_residuals, double alpha, double point) {
    const auto n = calibration_residuals.size();
    if (n == 0) throw Error(ErrorKind::InsufficientHistory, "vanilla CP needs at least one calibration residual");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::ConfigError, "alpha must lie in (0, 1)");
    const auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(n + 1) - 1e-12));
    if (rank > n) return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    std::vector<double> scores(n);
    std::transform(calibration_residuals.begin(), calibration_residuals.end(), scores.begin(),
                   [](double r) { return std::abs(r); });
    const auto kth = scores.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(rank, 1) - 1);
    std::nth_element(scores.begin(), kth, scores.end());
    return {point - *kth, point + *kth};
}

std::pair<FeatureMatrix, std::vector<double>> build_qrf_training_set(const ResidualHistory& history,
                                                                     std::span<const NodeIndex> sources) {
    const std::size_t w = history.window();
    std::size_t rows = 0;
    for (auto i : sources) {
        if (history.size(i) < w + 1)
            throw Error(ErrorKind::InsufficientHistory, "node " + std::to_string(i) + " has " +
                                                            std::to_string(history.size(i)) +
                                                            " residuals, need window+1 = " + std::to_string(w + 1));
        rows += history.size(i) - w;
    }
    FeatureMatrix features(rows, w);
    std::vector<double> targets;
    targets.reserve(rows);
    std::size_t r = 0;
    for (auto i : sources) {
        const auto& res = history.residuals(i);
        for (std::size_t start = 0; start + w < res.size(); ++start, ++r) {
            for (std::size_t c = 0; c < w; ++c) features(r, c) = res[start + w - 1 - c];
            targets.push_back(res[start + w]);
        }
    }
    return {std::move(features), std::move(targets)};
}

Interval residual_quantile_interval(const QuantileForest& forest, std::span<const double> query, double alpha,
                                   double point) {
    const double levels[] = {alpha / 2.0, 1.0 - alpha / 2.0};
    const auto q = forest.quantiles(query, levels);
    return {point + q[0], point + q[1]};
}

Interval graph_cp_step(NodeIndex node, const ResidualHistory& history, std::span<const NodeIndex> sources,
                       const ForestConfig& forest_config, double alpha, double point) {
    const auto [features, targets] = build_qrf_training_set(history, sources);
    const auto forest = QuantileForest::fit(features, targets, forest_config);
    return residual_quantile_interval(forest, history.latest(node), alpha, point);
}

std::int64_t poisson_quantile(double lambda, double level) {
    if (!(lambda > 0.0)) return 0;
    // P(X <= k) = Q(k + 1, λ), the regularized upper incomplete gamma.
    auto cdf = [lambda](std::int64_t k) { return boost::math::gamma_q(static_cast<double>(k) + 1.0, lambda); };
    auto k = static_cast<std::int64_t>(std::max(0.0, std::floor(lambda - 6.0 * std::sqrt(lambda) - 1.0)));
    while (k > 0 && cdf(k - 1) >= level) --k;
    while (cdf(k) < level) ++k;
    return k;
}

Interval poisson_interval(double lambda, double alpha) {
    return {static_cast<double>(poisson_quantile(lambda, alpha / 2.0)),
            static_cast<double>(poisson_quantile(lambda, 1.0 - alpha / 2.0))};
}

IntervalSeries run_conformal(const PanelDataset& panel, const ServiceGraph& graph, const ModelParams& params,
                             const DataSplit& split, const ConformalConfig& config) {
    return run_conformal(panel, graph, intensity_field(panel, graph, params), split, config);
}

IntervalSeries run_conformal(const PanelDataset& panel, const ServiceGraph& graph, const IntensityField& forecasts,
                             const DataSplit& split, const ConformalConfig& config) {
    const auto K = panel.units();
    if (graph.num_nodes() != K || forecasts.units != K || forecasts.times != panel.times())
        throw Error(ErrorKind::DimensionMismatch, "panel, graph and forecasts disagree on shape");
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw Error(ErrorKind::ConfigError, "alpha must lie in (0, 1)");
    if (split.test.end > panel.times() || split.calibration.end > split.test.begin)
        throw Error(ErrorKind::DimensionMismatch, "split does not fit the panel");
    const std::size_t capacity = config.calibration_window.value_or(split.calibration.size());
    if (capacity > split.calibration.size())
        throw Error(ErrorKind::InsufficientHistory, "calibration window " + std::to_string(capacity) +
                                                        " exceeds calibration range " +
                                                        std::to_string(split.calibration.size()));

    ResidualHistory history(K, capacity, config.window);
    for (std::size_t t = split.calibration.end - capacity; t < split.calibration.end; ++t)
        for (NodeIndex i = 0; i < K; ++i)
            history.push(i, static_cast<double>(panel.count(i, t)) - forecasts.at(i, t));
    // Vanilla CP keeps the fixed calibration scores.
    std::vector<std::vector<double>> calibration_scores(K);
    for (NodeIndex i = 0; i < K; ++i)
        calibration_scores[i].assign(history.residuals(i).begin(), history.residuals(i).end());

    const bool uses_forest = config.method == Method::Temporal || config.method == Method::Graph;
    std::vector<std::vector<NodeIndex>> sources(K);
    for (NodeIndex j = 0; j < K; ++j) {
        if (config.method == Method::Graph) {
            const auto n = graph.neighbors(j);
            sources[j].assign(n.begin(), n.end());
        } else {
            sources[j] = {j};
        }
    }

    IntervalSeries series;
    series.records.reserve(split.test.size() * K);
    std::vector<std::optional<QuantileForest>> forests(K);
    std::vector<Interval> step(K);
    std::size_t refits = 0;

    for (std::size_t t = split.test.begin; t < split.test.end; ++t) {
        const std::size_t offset = t - split.test.begin;
        const bool refit = uses_forest && (offset == 0 || (config.retrain_stride > 0 && offset % config.retrain_stride == 0));
        const auto k_nodes = static_cast<std::ptrdiff_t>(K);
#pragma omp parallel for schedule(dynamic) if (config.parallel)
        for (std::ptrdiff_t jj = 0; jj < k_nodes; ++jj) {
            const auto j = static_cast<NodeIndex>(jj);
            const double point = forecasts.at(j, t);
            switch (config.method) {
            case Method::Poisson: step[j] = poisson_interval(point, config.alpha); break;
            case Method::Vanilla: step[j] = vanilla_cp(calibration_scores[j], config.alpha, point); break;
            case Method::Temporal:
            case Method::Graph: {
                if (refit) {
                    auto forest_config = config.forest;
                    forest_config.seed = rng::derive(rng::derive(config.seed, j), refits);
                    forest_config.parallel = false;
                    const auto [features, targets] = build_qrf_training_set(history, sources[j]);
                    forests[j] = QuantileForest::fit(features, targets, forest_config);
                }
                step[j] = residual_quantile_interval(*forests[j], history.latest(j), config.alpha, point);
                break;
            }
            }
        }
        if (refit) ++refits;
        for (NodeIndex j = 0; j < K; ++j) {
            const auto y = static_cast<double>(panel.count(j, t));
            series.records.push_back({config.method, j, t, forecasts.at(j, t), step[j].lower, step[j].upper, y});
            history.push(j, y - forecasts.at(j, t));
        }
    }
    return series;
}

void write_intervals(std::ostream& out, const IntervalSeries& series) {
    out << "method,node,time,point,lower,upper,y_true\n";
    for (const auto& r : series.records)
        out << to_string(r.method) << ',' << r.node << ',' << r.time << ',' << csv::format(r.point) << ','
            << csv::format(r.lower) << ',' << csv::format(r.upper) << ',' << csv::format(r.y_true) << '\n';
}

void write_intervals(const std::filesystem::path& file, const IntervalSeries& series) {
    std::ofstream out(file);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + file.string());
    write_intervals(out, series);
}

IntervalSeries read_intervals(std::istream& in) {
    constexpr std::string_view what = "interval file";
    csv::expect_header(in, "method,node,time,point,lower,upper,y_true", what);
    IntervalSeries series;
    std::string line;
    std::size_t line_no = 1;
    while (csv::next_row(in, line, line_no)) {
        const auto f = csv::split(line);
        if (f.size() != 7) throw Error(ErrorKind::MalformedRow, csv::row_error(what, line_no, "expected 7 fields"));
        IntervalRecord r;
        r.method = method_from_string(f[0]);
        std::int64_t node = 0, time = 0;
        if (!csv::parse_int(f[1], node) || !csv::parse_int(f[2], time) || node < 0 || time < 0)
            throw Error(ErrorKind::MalformedRow, csv::row_error(what, line_no, "bad node or time"));
        r.node = static_cast<NodeIndex>(node);
        r.time = static_cast<std::size_t>(time);
        if (!csv::parse_double(f[3], r.point) || !csv::parse_double(f[4], r.lower) ||
            !csv::parse_double(f[5], r.upper) || !csv::parse_double(f[6], r.y_true))
            throw Error(ErrorKind::MalformedRow, csv::row_error(what, line_no, "bad number"));
        if (!(r.lower <= r.upper)) throw Error(ErrorKind::MalformedRow, csv::row_error(what, line_no, "lower > upper"));
        series.records.push_back(r);
    }
    return series;
}

IntervalSeries read_intervals(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + file.string());
    return read_intervals(in);
}

} // namespace graphcp
