#include <doctest.h>

#include "graphcp/error.hpp"
#include "graphcp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

using namespace graphcp;

namespace {

MethodReport one_node(const std::string& method, double coverage, double width, double outage = 100.0) {
    MethodReport r;
    r.method = method;
    r.nodes.push_back({0, 10, coverage, width, 0, outage});
    return r;
}

std::string winner_of(std::vector<MethodReport> reports, double alpha = 0.1) {
    const auto table = winner_table(reports, alpha);
    double sum = 0.0;
    std::string best;
    for (std::size_t m = 0; m < table.methods.size(); ++m) {
        sum += table.fractions[m];
        if (table.wins[m] == 1) best = table.methods[m];
    }
    CHECK(sum == doctest::Approx(1.0));
    return best;
}

IntervalSeries series_from(Method method, const std::vector<double>& y, double lower, double upper) {
    IntervalSeries s;
    for (std::size_t k = 0; k < y.size(); ++k) s.records.push_back({method, 0, k, 0.0, lower, upper, y[k]});
    return s;
}

} // namespace

TEST_CASE("coverage examples") {
    std::vector<double> y(10, 1.0);
    y[3] = 9.0;
    const auto r = coverage_metrics(series_from(Method::Graph, y, 0.0, 5.0));
    CHECK(r.coverage == doctest::Approx(0.9));
    CHECK(r.mean_width == 5.0);
    CHECK(r.method == "graph");
    CHECK(r.nodes.size() == 1);
    CHECK(r.nodes[0].coverage == r.coverage);

    const auto zeros = coverage_metrics(series_from(Method::Poisson, std::vector<double>(6, 0.0), 0.0, 2.0));
    CHECK(zeros.coverage == 1.0);
    CHECK(zeros.nonzero_coverage == 0.0);
}

TEST_CASE("nonzero coverage counts covered positive cells over all cells") {
    const auto r = coverage_metrics(series_from(Method::Temporal, {0, 0, 3, 4, 10}, 0.0, 5.0));
    CHECK(r.coverage == doctest::Approx(0.8));
    CHECK(r.nonzero_coverage == doctest::Approx(0.4));
}

TEST_CASE("infinite intervals are counted apart from the width") {
    const double inf = std::numeric_limits<double>::infinity();
    auto s = series_from(Method::Vanilla, {1, 2, 3}, 0.0, 4.0);
    s.records[1].lower = -inf;
    s.records[1].upper = inf;
    const auto r = coverage_metrics(s);
    CHECK(r.infinite_intervals == 1);
    CHECK(r.mean_width == 4.0);

    for (auto& rec : s.records) rec.lower = -inf, rec.upper = inf;
    CHECK(std::isinf(coverage_metrics(s).mean_width));
}

TEST_CASE("alignment checks against the panel") {
    PanelDataset panel(2, 4, {"wind"});
    panel.count(1, 2) = 7;
    const TimeRange test{2, 4};
    IntervalSeries s;
    for (std::size_t t = 2; t < 4; ++t)
        for (NodeIndex i = 0; i < 2; ++i)
            s.records.push_back({Method::Graph, i, t, 0.0, -1.0, 1.0, static_cast<double>(panel.count(i, t))});
    const auto r = coverage_metrics(s, panel, test);
    CHECK(r.coverage == 0.75);
    CHECK(r.nodes[1].mean_outage == 3.5);

    auto swapped = s;
    std::swap(swapped.records[0], swapped.records[1]);
    CHECK_THROWS_AS((void)coverage_metrics(swapped, panel, test), Error);
    auto wrong = s;
    wrong.records[3].y_true = 1.0;
    CHECK_THROWS_AS((void)coverage_metrics(wrong, panel, test), Error);
    auto missing = s;
    missing.records.pop_back();
    try {
        (void)coverage_metrics(missing, panel, test);
        FAIL("expected AlignmentError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::AlignmentError);
    }
    auto mixed = s;
    mixed.records[2].method = Method::Temporal;
    CHECK_THROWS_AS((void)coverage_metrics(mixed, panel, test), Error);
    CHECK(split_by_method(mixed).size() == 2);
}

TEST_CASE("winner table three-stage rule") {
    CHECK(winner_of({one_node("A", 0.91, 20), one_node("B", 0.85, 5), one_node("C", 0.80, 1)}) == "A");
    CHECK(winner_of({one_node("A", 0.92, 10), one_node("B", 0.91, 8)}) == "B");
    CHECK(winner_of({one_node("A", 0.7, 1), one_node("B", 0.85, 9)}) == "B");
}

TEST_CASE("winner table ties") {
    CHECK(winner_of({one_node("graph", 0.95, 8), one_node("temporal", 0.93, 8)}) == "temporal");
    CHECK(winner_of({one_node("graph", 0.8, 7), one_node("poisson", 0.8, 9)}) == "graph");
    CHECK(winner_of({one_node("graph", 0.8, 7), one_node("poisson", 0.8, 7)}) == "poisson");
    CHECK(winner_of({one_node("zeta", 0.8, 7), one_node("alpha", 0.8, 7), one_node("graph", 0.8, 7)}) == "graph");
    CHECK(method_precedes("poisson", "vanilla"));
    CHECK(method_precedes("vanilla", "temporal"));
    CHECK(method_precedes("temporal", "graph"));
    CHECK(method_precedes("graph", "A"));
}

TEST_CASE("winner table is invariant to input order and honours the threshold") {
    std::vector<MethodReport> reports;
    const char* names[] = {"poisson", "temporal", "graph"};
    for (int m = 0; m < 3; ++m) {
        MethodReport r;
        r.method = names[m];
        for (NodeIndex n = 0; n < 12; ++n)
            r.nodes.push_back({n, 10, 0.7 + 0.02 * ((n * 7 + m * 5) % 11), 5.0 + ((n + m) % 4), 0,
                               n % 3 == 0 ? 10.0 : 60.0});
        reports.push_back(r);
    }
    const auto a = winner_table(reports, 0.1);
    std::reverse(reports.begin(), reports.end());
    const auto b = winner_table(reports, 0.1);
    CHECK(a.methods == b.methods);
    CHECK(a.wins == b.wins);
    CHECK(a.eligible_nodes == 8);
    double sum = 0.0;
    for (double f : a.fractions) sum += f;
    CHECK(sum == doctest::Approx(1.0));

    try {
        (void)winner_table(reports, 0.1, 1000.0);
        FAIL("expected NoEligibleNodes");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NoEligibleNodes);
    }
    CHECK_THROWS_AS((void)winner_table(std::span(reports).first(1), 0.1), Error);
}

TEST_CASE("violin export") {
    std::vector<MethodReport> reports;
    for (const char* name : {"poisson", "temporal", "graph"}) {
        MethodReport r;
        r.method = name;
        for (NodeIndex n = 0; n < 10; ++n) r.nodes.push_back({n, 3, n / 3.0, 1.0, 0, 1.0});
        reports.push_back(r);
    }
    std::ostringstream out;
    violin_export(out, reports);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "method,node,coverage");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        const auto node = static_cast<NodeIndex>(rows % 10);
        CHECK(std::stod(line.substr(line.rfind(',') + 1)) == reports[rows / 10].nodes[node].coverage);
        ++rows;
    }
    CHECK(rows == 30);

    std::ostringstream empty;
    CHECK_THROWS_AS(violin_export(empty, std::span<const MethodReport>{}), Error);
    reports[1].nodes.clear();
    CHECK_THROWS_AS(violin_export(empty, reports), Error);
}

TEST_CASE("metrics recomputed from the interval CSV are bit-identical") {
    IntervalSeries s;
    for (std::size_t t = 0; t < 50; ++t)
        for (NodeIndex i = 0; i < 3; ++i) {
            const double point = 0.1 * static_cast<double>(t) + 1.0 / (i + 3.0);
            s.records.push_back({Method::Graph, i, t, point, point - 0.7 / (t + 1.0), point + 1.3 / (i + 1.0),
                                 static_cast<double>((t * 3 + i) % 5)});
        }
    std::stringstream buf;
    write_intervals(buf, s);
    CHECK(coverage_metrics(read_intervals(buf)) == coverage_metrics(s));
}
