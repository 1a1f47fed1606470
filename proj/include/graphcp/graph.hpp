#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace graphcp {

using NodeIndex = std::size_t;

/// Directed influence edge. `target` is the unit whose intensity is raised,
/// `source` is the unit whose past outages do the raising, so that
/// source ∈ N(target). On disk this is the row "src,dst" = (target, source).
struct Edge {
    NodeIndex target{0};
    NodeIndex source{0};
    double weight{1.0};
};

/// Service-area graph over units 0..K-1. Immutable after construction.
///
/// Invariants enforced by the constructor:
///   - no pair appears twice, and no explicit self-loop (the diagonal is implicit)
///   - antisymmetry: (i,j) present with i != j means (j,i) absent
///   - every endpoint is a valid node index
/// N(i) always contains i itself, listed first.
class ServiceGraph {
public:
    ServiceGraph() = default;
    ServiceGraph(std::size_t num_nodes, std::vector<Edge> edges);

    [[nodiscard]] std::size_t num_nodes() const noexcept { return neighbors_.size(); }
    [[nodiscard]] std::size_t num_edges() const noexcept { return edges_.size(); }
    [[nodiscard]] std::span<const Edge> edges() const noexcept { return edges_; }

    /// N(i): i followed by its in-influence sources in ascending order.
    [[nodiscard]] std::span<const NodeIndex> neighbors(NodeIndex i) const { return neighbors_.at(i); }

    /// Edge indices e with edges()[e].target == i, ordered by source.
    [[nodiscard]] std::span<const std::size_t> incoming_edges(NodeIndex i) const { return incoming_.at(i); }

    /// Same topology without any edges (every N(i) = {i}).
    [[nodiscard]] ServiceGraph without_edges() const { return ServiceGraph(num_nodes(), {}); }

private:
    std::vector<Edge> edges_;
    std::vector<std::vector<NodeIndex>> neighbors_;
    std::vector<std::vector<std::size_t>> incoming_;
};

// Named topologies used by the scenario generator.
[[nodiscard]] ServiceGraph make_chain(std::size_t num_nodes);
/// Hub 0 influences every leaf: edges (leaf, 0).
[[nodiscard]] ServiceGraph make_star(std::size_t num_nodes);
/// rows x cols lattice, row-major; each cell is influenced by its left and upper neighbour.
[[nodiscard]] ServiceGraph make_grid(std::size_t rows, std::size_t cols);

/// Reads "src,dst[,weight]" rows (with header) over nodes 0..num_nodes-1.
[[nodiscard]] ServiceGraph load_graph(const std::filesystem::path& edge_file, std::size_t num_nodes);
[[nodiscard]] ServiceGraph parse_graph(std::istream& in, std::size_t num_nodes);

void write_graph(const std::filesystem::path& edge_file, const ServiceGraph& graph);
void write_graph(std::ostream& out, const ServiceGraph& graph);

} // namespace graphcp
