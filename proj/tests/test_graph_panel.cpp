#include <doctest.h>

#include "graphcp/error.hpp"
#include "graphcp/graph.hpp"
#include "graphcp/panel.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <vector>

using namespace graphcp;

namespace {

ServiceGraph graph_from(const std::string& text, std::size_t k) {
    std::istringstream in(text);
    return parse_graph(in, k);
}

ErrorKind graph_error(const std::string& text, std::size_t k) {
    try {
        (void)graph_from(text, k);
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::IoError;
}

ErrorKind panel_error(const std::string& weather, const std::string& counts) {
    std::istringstream w(weather), c(counts);
    try {
        (void)parse_panel(w, c);
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::IoError;
}

std::vector<NodeIndex> neighbors_of(const ServiceGraph& g, NodeIndex i) {
    auto n = g.neighbors(i);
    return {n.begin(), n.end()};
}

} // namespace

TEST_CASE("single edge gives the target its source as neighbour") {
    const auto g = graph_from("src,dst\n0,1\n", 2);
    CHECK(neighbors_of(g, 0) == std::vector<NodeIndex>{0, 1});
    CHECK(neighbors_of(g, 1) == std::vector<NodeIndex>{1});
    CHECK(g.edges()[0].weight == 1.0);
}

TEST_CASE("empty edge list leaves only self-membership") {
    const auto g = graph_from("src,dst,weight\n", 3);
    for (NodeIndex i = 0; i < 3; ++i) CHECK(neighbors_of(g, i) == std::vector<NodeIndex>{i});
}

TEST_CASE("graph loader errors") {
    CHECK(graph_error("src,dst\n0,1\n1,0\n", 2) == ErrorKind::SymmetricEdgePair);
    CHECK(graph_error("src,dst\n0,1\n0,1\n", 2) == ErrorKind::DuplicateEdge);
    CHECK(graph_error("src,dst\n0,0\n", 2) == ErrorKind::DuplicateEdge);
    CHECK(graph_error("src,dst\n0,5\n", 2) == ErrorKind::UnknownNodeReference);
    CHECK(graph_error("src,dst\n0\n", 2) == ErrorKind::MalformedRow);
    CHECK(graph_error("src,dst\na,b\n", 2) == ErrorKind::MalformedRow);
    CHECK(graph_error("from,to\n0,1\n", 2) == ErrorKind::MalformedRow);
    CHECK(graph_error("src,dst,weight\n0,1,-2\n", 2) == ErrorKind::MalformedRow);
}

TEST_CASE("weights are parsed and kept") {
    const auto g = graph_from("src,dst,weight\n2,0,0.25\n", 3);
    CHECK(g.edges()[0].weight == 0.25);
}

TEST_CASE("random graphs: neighbour total is K + |E| and antisymmetry rejects exactly the reversed pairs") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 2 + rng() % 7;
        std::set<std::pair<NodeIndex, NodeIndex>> pairs;
        const std::size_t attempts = rng() % (k * 2);
        for (std::size_t a = 0; a < attempts; ++a) {
            NodeIndex i = rng() % k, j = rng() % k;
            if (i != j) pairs.emplace(i, j);
        }
        bool symmetric = false;
        for (const auto& [i, j] : pairs) symmetric |= pairs.contains({j, i});
        std::ostringstream text;
        text << "src,dst\n";
        for (const auto& [i, j] : pairs) text << i << ',' << j << '\n';
        if (symmetric) {
            CHECK(graph_error(text.str(), k) == ErrorKind::SymmetricEdgePair);
            continue;
        }
        const auto g = graph_from(text.str(), k);
        std::size_t total = 0;
        for (NodeIndex i = 0; i < k; ++i) {
            total += g.neighbors(i).size();
            CHECK(g.neighbors(i).front() == i);
        }
        CHECK(total == k + pairs.size());
    }
}

TEST_CASE("named topologies") {
    const auto star = make_star(5);
    CHECK(star.num_edges() == 4);
    CHECK(neighbors_of(star, 3) == std::vector<NodeIndex>{3, 0});
    CHECK(neighbors_of(star, 0) == std::vector<NodeIndex>{0});

    const auto grid = make_grid(4, 5);
    CHECK(grid.num_nodes() == 20);
    CHECK(grid.num_edges() == 4 * 4 + 3 * 5);
    CHECK(neighbors_of(grid, 6) == std::vector<NodeIndex>{6, 1, 5});

    const auto chain = make_chain(3);
    CHECK(neighbors_of(chain, 2) == std::vector<NodeIndex>{2, 1});
}

TEST_CASE("panel loads dense 2x3x1") {
    std::ostringstream w, c;
    w << "unit,time,variable,value\n";
    c << "unit,time,count\n";
    for (int i = 0; i < 2; ++i)
        for (int t = 0; t < 3; ++t) {
            w << i << ',' << t << ",wind," << (i + 0.5 * t) << '\n';
            c << i << ',' << t << ',' << i * 3 + t << '\n';
        }
    std::istringstream wi(w.str()), ci(c.str());
    const auto p = parse_panel(wi, ci);
    CHECK(p.units() == 2);
    CHECK(p.times() == 3);
    CHECK(p.variables() == 1);
    CHECK(p.weather(1, 2, 0) == 2.0);
    CHECK(p.count(1, 1) == 4);
}

TEST_CASE("panel loader errors") {
    const std::string weather_ok = "unit,time,variable,value\n0,0,w,1\n0,1,w,1\n1,0,w,1\n1,1,w,1\n";
    const std::string counts_ok = "unit,time,count\n0,0,1\n0,1,1\n1,0,1\n1,1,1\n";
    CHECK(panel_error(weather_ok, "unit,time,count\n0,0,-1\n0,1,1\n1,0,1\n1,1,1\n") == ErrorKind::NegativeCount);
    CHECK(panel_error(weather_ok, "unit,time,count\n0,0,1.5\n0,1,1\n1,0,1\n1,1,1\n") == ErrorKind::NonIntegerCount);
    CHECK(panel_error("unit,time,variable,value\n0,0,w,1\n0,1,w,1\n1,0,w,1\n", counts_ok) ==
          ErrorKind::MissingCell);
    CHECK(panel_error(weather_ok, "unit,time,count\n0,0,1\n0,1,1\n1,0,1\n") == ErrorKind::MissingCell);
    CHECK(panel_error(weather_ok, counts_ok + "2,0,1\n2,1,1\n") == ErrorKind::DimensionMismatch);
    CHECK(panel_error("unit,time,variable,value\n0,0,w,nan\n0,1,w,1\n1,0,w,1\n1,1,w,1\n", counts_ok) ==
          ErrorKind::MalformedRow);
}

TEST_CASE("missing weather cell (1,2,0) is reported") {
    std::ostringstream w, c;
    w << "unit,time,variable,value\n";
    c << "unit,time,count\n";
    for (int i = 0; i < 2; ++i)
        for (int t = 0; t < 3; ++t) {
            if (!(i == 1 && t == 2)) w << i << ',' << t << ",rain,1\n";
            c << i << ',' << t << ",0\n";
        }
    std::istringstream wi(w.str()), ci(c.str());
    try {
        (void)parse_panel(wi, ci);
        FAIL("expected MissingCell");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MissingCell);
        CHECK(std::string(e.what()).find("(1,2,0)") != std::string::npos);
    }
}

TEST_CASE("write_panel reproduces canonical input") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal(0.0, 10.0);
    PanelDataset p(3, 4, {"wind", "rain"});
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t t = 0; t < 4; ++t) {
            p.count(i, t) = static_cast<std::int64_t>(rng() % 50);
            for (std::size_t m = 0; m < 2; ++m) p.weather(i, t, m) = normal(rng);
        }
    std::ostringstream w1, c1;
    write_panel(w1, c1, p);
    std::istringstream wi(w1.str()), ci(c1.str());
    const auto q = parse_panel(wi, ci);
    std::ostringstream w2, c2;
    write_panel(w2, c2, q);
    CHECK(w1.str() == w2.str());
    CHECK(c1.str() == c2.str());
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t t = 0; t < 4; ++t)
            for (std::size_t m = 0; m < 2; ++m) CHECK(q.weather(i, t, m) == p.weather(i, t, m));
}

TEST_CASE("split examples") {
    const auto s9 = split(9, 1.0 / 3, 1.0 / 3, 1.0 / 3);
    CHECK(s9.train == TimeRange{0, 3});
    CHECK(s9.calibration == TimeRange{3, 6});
    CHECK(s9.test == TimeRange{6, 9});

    const auto s10 = split(10, 1.0 / 3, 1.0 / 3, 1.0 / 3);
    CHECK(s10.train == TimeRange{0, 3});
    CHECK(s10.calibration == TimeRange{3, 6});
    CHECK(s10.test == TimeRange{6, 10});

    CHECK_THROWS_AS((void)split(2, 1.0 / 3, 1.0 / 3, 1.0 / 3), Error);
    CHECK_THROWS_AS((void)split(10, 0.5, 0.5, 0.0), Error);
    CHECK_THROWS_AS((void)split(10, 0.5, 0.3, 0.3), Error);
}
