#include "graphcp/eval.hpp"

#include "csv.hpp"
#include "graphcp/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <utility>

namespace graphcp {

namespace {

constexpr double kCoverageTolerance = 1e-12;

struct Accumulator {
    std::size_t cells{0};
    std::size_t covered{0};
    std::size_t nonzero_covered{0};
    std::size_t infinite{0};
    double width_sum{0.0};
    double outage_sum{0.0};

    void add(const IntervalRecord& r) {
        ++cells;
        const bool hit = r.lower <= r.y_true && r.y_true <= r.upper;
        covered += hit;
        nonzero_covered += hit && r.y_true > 0.0;
        const double w = r.upper - r.lower;
        if (std::isfinite(w))
            width_sum += w;
        else
            ++infinite;
        outage_sum += r.y_true;
    }

    [[nodiscard]] double coverage() const { return static_cast<double>(covered) / static_cast<double>(cells); }
    [[nodiscard]] double mean_width() const {
        const auto finite = cells - infinite;
        return finite == 0 ? std::numeric_limits<double>::infinity() : width_sum / static_cast<double>(finite);
    }
};

MethodReport finish(const IntervalSeries& series) {
    if (series.records.empty()) throw Error(ErrorKind::AlignmentError, "empty interval series");
    const Method method = series.records.front().method;
    Accumulator total;
    std::map<NodeIndex, Accumulator> per_node;
    for (const auto& r : series.records) {
        if (r.method != method) throw Error(ErrorKind::AlignmentError, "series mixes methods");
        total.add(r);
        per_node[r.node].add(r);
    }
    MethodReport report;
    report.method = std::string(to_string(method));
    report.cells = total.cells;
    report.coverage = total.coverage();
    report.nonzero_coverage = static_cast<double>(total.nonzero_covered) / static_cast<double>(total.cells);
    report.mean_width = total.mean_width();
    report.infinite_intervals = total.infinite;
    for (const auto& [node, acc] : per_node)
        report.nodes.push_back({node, acc.cells, acc.coverage(), acc.mean_width(), acc.infinite,
                                acc.outage_sum / static_cast<double>(acc.cells)});
    return report;
}

std::size_t known_rank(const std::string& name) {
    for (auto m : {Method::Poisson, Method::Vanilla, Method::Temporal, Method::Graph})
        if (name == to_string(m)) return static_cast<std::size_t>(m);
    return 4;
}

std::ofstream open_out(const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + file.string());
    return out;
}

} // namespace

MethodReport coverage_metrics(const IntervalSeries& series, const PanelDataset& truths, const TimeRange& test) {
    const auto K = truths.units();
    if (test.end > truths.times() || test.size() == 0)
        throw Error(ErrorKind::AlignmentError, "test range outside the panel");
    if (series.records.size() != test.size() * K)
        throw Error(ErrorKind::AlignmentError, "expected " + std::to_string(test.size() * K) + " records, got " +
                                                   std::to_string(series.records.size()));
    std::size_t k = 0;
    for (std::size_t t = test.begin; t < test.end; ++t)
        for (NodeIndex i = 0; i < K; ++i, ++k) {
            const auto& r = series.records[k];
            if (r.node != i || r.time != t)
                throw Error(ErrorKind::AlignmentError, "record " + std::to_string(k) + " is (" +
                                                           std::to_string(r.node) + "," + std::to_string(r.time) +
                                                           "), expected (" + std::to_string(i) + "," +
                                                           std::to_string(t) + ")");
            if (r.y_true != static_cast<double>(truths.count(i, t)))
                throw Error(ErrorKind::AlignmentError, "y_true disagrees with the panel at (" + std::to_string(i) +
                                                           "," + std::to_string(t) + ")");
        }
    return finish(series);
}

MethodReport coverage_metrics(const IntervalSeries& series) {
    std::set<std::pair<NodeIndex, std::size_t>> seen;
    for (const auto& r : series.records)
        if (!seen.emplace(r.node, r.time).second)
            throw Error(ErrorKind::AlignmentError,
                        "duplicate cell (" + std::to_string(r.node) + "," + std::to_string(r.time) + ")");
    return finish(series);
}

std::vector<IntervalSeries> split_by_method(const IntervalSeries& series) {
    std::vector<IntervalSeries> out;
    std::vector<Method> order;
    for (const auto& r : series.records) {
        auto it = std::find(order.begin(), order.end(), r.method);
        if (it == order.end()) {
            order.push_back(r.method);
            out.emplace_back();
            it = order.end() - 1;
        }
        out[static_cast<std::size_t>(it - order.begin())].records.push_back(r);
    }
    return out;
}

bool method_precedes(const std::string& a, const std::string& b) {
    const auto ra = known_rank(a);
    const auto rb = known_rank(b);
    if (ra != rb) return ra < rb;
    return a < b;
}

WinnerTable winner_table(std::span<const MethodReport> reports, double alpha, double outage_threshold) {
    if (reports.size() < 2) throw Error(ErrorKind::ConfigError, "winner table needs at least two methods");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::ConfigError, "alpha must lie in (0,1)");
    if (!(outage_threshold >= 0.0)) throw Error(ErrorKind::ConfigError, "outage threshold must be >= 0");

    std::vector<const MethodReport*> sorted;
    for (const auto& r : reports) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(),
              [](const MethodReport* a, const MethodReport* b) { return method_precedes(a->method, b->method); });
    for (std::size_t m = 1; m < sorted.size(); ++m)
        if (sorted[m]->method == sorted[m - 1]->method)
            throw Error(ErrorKind::ConfigError, "duplicate method " + sorted[m]->method);

    const auto& base = sorted.front()->nodes;
    for (const auto* r : sorted) {
        if (r->nodes.size() != base.size()) throw Error(ErrorKind::ConfigError, "methods cover different nodes");
        for (std::size_t n = 0; n < base.size(); ++n)
            if (r->nodes[n].node != base[n].node) throw Error(ErrorKind::ConfigError, "methods cover different nodes");
    }

    WinnerTable table;
    table.target_coverage = 1.0 - alpha;
    table.outage_threshold = outage_threshold;
    for (const auto* r : sorted) table.methods.push_back(r->method);
    table.wins.assign(sorted.size(), 0);

    const double target = table.target_coverage - kCoverageTolerance;
    for (std::size_t n = 0; n < base.size(); ++n) {
        if (!(base[n].mean_outage > outage_threshold)) continue;
        ++table.eligible_nodes;
        std::vector<std::size_t> achievers;
        for (std::size_t m = 0; m < sorted.size(); ++m)
            if (sorted[m]->nodes[n].coverage >= target) achievers.push_back(m);

        std::size_t winner = 0;
        if (achievers.size() == 1) {
            winner = achievers.front();
        } else if (achievers.size() > 1) {
            // Achievers are in method order, so strict < keeps the earliest on equal width.
            winner = achievers.front();
            for (auto m : achievers)
                if (sorted[m]->nodes[n].mean_width < sorted[winner]->nodes[n].mean_width) winner = m;
        } else {
            for (std::size_t m = 1; m < sorted.size(); ++m) {
                const auto& cand = sorted[m]->nodes[n];
                const auto& best = sorted[winner]->nodes[n];
                if (cand.coverage > best.coverage ||
                    (cand.coverage == best.coverage && cand.mean_width < best.mean_width))
                    winner = m;
            }
        }
        ++table.wins[winner];
    }
    if (table.eligible_nodes == 0)
        throw Error(ErrorKind::NoEligibleNodes,
                    "no node has mean outage above " + csv::format(outage_threshold));
    for (auto w : table.wins)
        table.fractions.push_back(static_cast<double>(w) / static_cast<double>(table.eligible_nodes));
    return table;
}

void violin_export(std::ostream& out, std::span<const MethodReport> reports) {
    if (reports.empty()) throw Error(ErrorKind::DegenerateData, "violin export: no methods");
    for (const auto& r : reports)
        if (r.nodes.empty()) throw Error(ErrorKind::DegenerateData, "violin export: method " + r.method + " has no nodes");
    out << "method,node,coverage\n";
    for (const auto& r : reports)
        for (const auto& n : r.nodes) out << r.method << ',' << n.node << ',' << csv::format(n.coverage) << '\n';
}

void write_reports(std::ostream& out, std::span<const MethodReport> reports) {
    out << "method,cells,coverage,nonzero_coverage,mean_width,infinite_intervals\n";
    for (const auto& r : reports)
        out << r.method << ',' << r.cells << ',' << csv::format(r.coverage) << ',' << csv::format(r.nonzero_coverage)
            << ',' << csv::format(r.mean_width) << ',' << r.infinite_intervals << '\n';
}

void write_winner_table(std::ostream& out, const WinnerTable& table) {
    out << "method,wins,fraction,eligible_nodes,target_coverage,outage_threshold\n";
    for (std::size_t m = 0; m < table.methods.size(); ++m)
        out << table.methods[m] << ',' << table.wins[m] << ',' << csv::format(table.fractions[m]) << ','
            << table.eligible_nodes << ',' << csv::format(table.target_coverage) << ','
            << csv::format(table.outage_threshold) << '\n';
}

void write_node_metrics(std::ostream& out, std::span<const MethodReport> reports) {
    out << "method,node,cells,coverage,mean_width,infinite_intervals,mean_outage\n";
    for (const auto& r : reports)
        for (const auto& n : r.nodes)
            out << r.method << ',' << n.node << ',' << n.cells << ',' << csv::format(n.coverage) << ','
                << csv::format(n.mean_width) << ',' << n.infinite_intervals << ',' << csv::format(n.mean_outage)
                << '\n';
}

void write_node_metrics(const std::filesystem::path& file, std::span<const MethodReport> reports) {
    auto out = open_out(file);
    write_node_metrics(out, reports);
}

void write_reports(const std::filesystem::path& file, std::span<const MethodReport> reports) {
    auto out = open_out(file);
    write_reports(out, reports);
}

void write_winner_table(const std::filesystem::path& file, const WinnerTable& table) {
    auto out = open_out(file);
    write_winner_table(out, table);
}

void violin_export(const std::filesystem::path& file, std::span<const MethodReport> reports) {
    std::ostringstream buf;
    violin_export(buf, reports);
    auto out = open_out(file);
    out << buf.str();
}

} // namespace graphcp
