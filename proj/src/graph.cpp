#include "graphcp/graph.hpp"

#include "csv.hpp"
#include "graphcp/error.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <utility>

namespace graphcp {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::DuplicateEdge: return "DuplicateEdge";
    case ErrorKind::SymmetricEdgePair: return "SymmetricEdgePair";
    case ErrorKind::UnknownNodeReference: return "UnknownNodeReference";
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::MissingCell: return "MissingCell";
    case ErrorKind::NegativeCount: return "NegativeCount";
    case ErrorKind::NonIntegerCount: return "NonIntegerCount";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::BadFractions: return "BadFractions";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::ExplosiveConfig: return "ExplosiveConfig";
    case ErrorKind::DegenerateData: return "DegenerateData";
    case ErrorKind::InsufficientHistory: return "InsufficientHistory";
    case ErrorKind::UnknownMethod: return "UnknownMethod";
    case ErrorKind::AlignmentError: return "AlignmentError";
    case ErrorKind::NoEligibleNodes: return "NoEligibleNodes";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

ServiceGraph::ServiceGraph(std::size_t num_nodes, std::vector<Edge> edges)
    : edges_(std::move(edges)), neighbors_(num_nodes), incoming_(num_nodes) {
    std::set<std::pair<NodeIndex, NodeIndex>> seen;
    for (const auto& e : edges_) {
        if (e.target >= num_nodes || e.source >= num_nodes)
            throw Error(ErrorKind::UnknownNodeReference,
                        "edge (" + std::to_string(e.target) + "," + std::to_string(e.source) + ") with K=" +
                            std::to_string(num_nodes));
        if (e.target == e.source)
            throw Error(ErrorKind::DuplicateEdge,
                        "self-loop (" + std::to_string(e.target) + "," + std::to_string(e.source) +
                            ") duplicates the implicit diagonal");
        if (!(e.weight >= 0.0))
            throw Error(ErrorKind::MalformedRow, "edge weight must be nonnegative");
        if (!seen.emplace(e.target, e.source).second)
            throw Error(ErrorKind::DuplicateEdge,
                        "(" + std::to_string(e.target) + "," + std::to_string(e.source) + ")");
        if (seen.contains({e.source, e.target}))
            throw Error(ErrorKind::SymmetricEdgePair,
                        "(" + std::to_string(e.target) + "," + std::to_string(e.source) + ") and its reverse");
    }

    for (NodeIndex i = 0; i < num_nodes; ++i) neighbors_[i].push_back(i);
    std::vector<std::size_t> order(edges_.size());
    for (std::size_t e = 0; e < order.size(); ++e) order[e] = e;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::pair(edges_[a].target, edges_[a].source) < std::pair(edges_[b].target, edges_[b].source);
    });
    for (auto e : order) {
        neighbors_[edges_[e].target].push_back(edges_[e].source);
        incoming_[edges_[e].target].push_back(e);
    }
}

ServiceGraph make_chain(std::size_t num_nodes) {
    std::vector<Edge> edges;
    for (NodeIndex i = 1; i < num_nodes; ++i) edges.push_back({i, i - 1, 1.0});
    return ServiceGraph(num_nodes, std::move(edges));
}

ServiceGraph make_star(std::size_t num_nodes) {
    std::vector<Edge> edges;
    for (NodeIndex i = 1; i < num_nodes; ++i) edges.push_back({i, 0, 1.0});
    return ServiceGraph(num_nodes, std::move(edges));
}

ServiceGraph make_grid(std::size_t rows, std::size_t cols) {
    std::vector<Edge> edges;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const NodeIndex cell = r * cols + c;
            if (c > 0) edges.push_back({cell, cell - 1, 1.0});
            if (r > 0) edges.push_back({cell, cell - cols, 1.0});
        }
    }
    return ServiceGraph(rows * cols, std::move(edges));
}

ServiceGraph parse_graph(std::istream& in, std::size_t num_nodes) {
    constexpr std::string_view what = "edge file";
    std::string header;
    if (!std::getline(in, header)) throw Error(ErrorKind::MalformedRow, "edge file: missing header");
    const auto cols = csv::split(header);
    if (cols.size() < 2 || cols.size() > 3 || cols[0] != "src" || cols[1] != "dst" ||
        (cols.size() == 3 && cols[2] != "weight"))
        throw Error(ErrorKind::MalformedRow, "edge file: expected header 'src,dst[,weight]'");

    std::vector<Edge> edges;
    std::string line;
    std::size_t line_no = 1;
    while (csv::next_row(in, line, line_no)) {
        const auto fields = csv::split(line);
        if (fields.size() < 2 || fields.size() > 3)
            throw Error(ErrorKind::MalformedRow, csv::row_error(what, line_no, "expected 2 or 3 fields"));
        std::int64_t src = 0, dst = 0;
        double weight = 1.0;
        if (!csv::parse_int(fields[0], src) || !csv::parse_int(fields[1], dst))
            throw Error(ErrorKind::MalformedRow, csv::row_error(what, line_no, "non-integer node index"));
        if (fields.size() == 3 && !fields[2].empty() && !csv::parse_double(fields[2], weight))
            throw Error(ErrorKind::MalformedRow, csv::row_error(what, line_no, "bad weight"));
        if (src < 0 || dst < 0 || static_cast<std::size_t>(src) >= num_nodes ||
            static_cast<std::size_t>(dst) >= num_nodes)
            throw Error(ErrorKind::UnknownNodeReference,
                        csv::row_error(what, line_no, "node index outside 0.." + std::to_string(num_nodes) + "-1"));
        edges.push_back({static_cast<NodeIndex>(src), static_cast<NodeIndex>(dst), weight});
    }
    return ServiceGraph(num_nodes, std::move(edges));
}

ServiceGraph load_graph(const std::filesystem::path& edge_file, std::size_t num_nodes) {
    std::ifstream in(edge_file);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + edge_file.string());
    return parse_graph(in, num_nodes);
}

void write_graph(std::ostream& out, const ServiceGraph& graph) {
    out << "src,dst,weight\n";
    for (const auto& e : graph.edges()) out << e.target << ',' << e.source << ',' << csv::format(e.weight) << '\n';
}

void write_graph(const std::filesystem::path& edge_file, const ServiceGraph& graph) {
    std::ofstream out(edge_file);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + edge_file.string());
    write_graph(out, graph);
}

} // namespace graphcp
