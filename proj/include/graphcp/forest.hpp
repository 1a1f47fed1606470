#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace graphcp {

/// Row-major dense matrix of features.
struct FeatureMatrix {
    std::size_t rows{0};
    std::size_t cols{0};
    std::vector<double> values;

    FeatureMatrix() = default;
    FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

    [[nodiscard]] double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const {
        return std::span<const double>(values).subspan(r * cols, cols);
    }
};

struct ForestConfig {
    std::size_t n_trees{100};
    std::optional<std::size_t> max_depth; // unlimited when empty
    std::size_t min_leaf{5};
    std::optional<std::size_t> mtry;      // ceil(p / 3) when empty
    bool bootstrap{true};
    std::uint64_t seed{0};
    /// Grow trees concurrently; the result is identical either way.
    bool parallel{true};
};

/// Quantile regression forest: variance-reduction trees whose leaves keep the
/// indices of their training targets, queried through Meinshausen weights.
class QuantileForest {
public:
    /// Throws DegenerateData on empty input, DimensionMismatch on shape errors,
    /// ConfigError on invalid hyperparameters.
    static QuantileForest fit(const FeatureMatrix& features, std::span<const double> targets,
                              const ForestConfig& config);

    [[nodiscard]] std::size_t tree_count() const noexcept { return trees_.size(); }
    [[nodiscard]] std::size_t feature_count() const noexcept { return features_; }
    [[nodiscard]] std::span<const double> targets() const noexcept { return targets_; }

    /// w_k(query): average over trees of (multiplicity of k in the query's leaf) / |leaf|.
    [[nodiscard]] std::vector<double> weights(std::span<const double> query) const;

    /// inf { z : Σ_{targets ≤ z} w ≥ level }.
    [[nodiscard]] double quantile(std::span<const double> query, double level) const;
    [[nodiscard]] std::vector<double> quantiles(std::span<const double> query, std::span<const double> levels) const;

    /// Training indices held by each leaf of tree `t` (with bootstrap multiplicity).
    [[nodiscard]] std::vector<std::vector<std::uint32_t>> leaves(std::size_t t) const;
    [[nodiscard]] std::size_t depth(std::size_t t) const;

    /// Debug dump; the layout is not a stable format.
    [[nodiscard]] std::string to_json() const;

private:
    struct Node {
        std::uint32_t feature{0};
        double threshold{0.0};
        std::int32_t left{-1}; // -1 marks a leaf
        std::int32_t right{-1};
        std::uint32_t begin{0}; // leaf range in Tree::samples
        std::uint32_t end{0};
        std::uint32_t depth{0};
    };
    struct Tree {
        std::vector<Node> nodes;
        std::vector<std::uint32_t> samples;
    };

    static Tree grow(const FeatureMatrix& features, std::span<const double> targets, const ForestConfig& config,
                     std::size_t mtry, std::uint64_t tree_seed);
    [[nodiscard]] const Node& leaf_for(const Tree& tree, std::span<const double> query) const;

    std::vector<Tree> trees_;
    std::vector<double> targets_;
    std::vector<std::uint32_t> sorted_; // training indices ordered by target
    std::size_t features_{0};
};

[[nodiscard]] inline QuantileForest fit_forest(const FeatureMatrix& features, std::span<const double> targets,
                                               const ForestConfig& config) {
    return QuantileForest::fit(features, targets, config);
}

[[nodiscard]] inline double quantile(const QuantileForest& forest, std::span<const double> query, double level) {
    return forest.quantile(query, level);
}

/// Pinball loss: αx for x >= 0, (α - 1)x otherwise.
[[nodiscard]] inline double pinball_loss(double x, double alpha) noexcept {
    return x >= 0.0 ? alpha * x : (alpha - 1.0) * x;
}

} // namespace graphcp
