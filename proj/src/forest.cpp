#include "graphcp/forest.hpp"

#include "graphcp/error.hpp"
#include "graphcp/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace graphcp {

namespace {

struct Frame {
    std::int32_t node;
    std::uint32_t lo;
    std::uint32_t hi;
    std::uint32_t depth;
};

} // namespace

QuantileForest::Tree QuantileForest::grow(const FeatureMatrix& features, std::span<const double> targets,
                                          const ForestConfig& config, std::size_t mtry, std::uint64_t tree_seed) {
    rng::Engine engine(tree_seed);
    const auto n = static_cast<std::uint32_t>(targets.size());
    Tree tree;
    tree.samples.resize(n);
    if (config.bootstrap) {
        for (auto& s : tree.samples) s = static_cast<std::uint32_t>(rng::below(engine, n));
        std::sort(tree.samples.begin(), tree.samples.end());
    } else {
        std::iota(tree.samples.begin(), tree.samples.end(), 0u);
    }

    std::vector<std::uint32_t> feature_pool(features.cols);
    std::vector<std::pair<double, double>> buf;
    tree.nodes.push_back({});
    std::vector<Frame> stack{{0, 0, n, 0}};

    while (!stack.empty()) {
        const Frame f = stack.back();
        stack.pop_back();
        Node& node = tree.nodes[static_cast<std::size_t>(f.node)];
        node.begin = f.lo;
        node.end = f.hi;
        node.depth = f.depth;
        const std::uint32_t count = f.hi - f.lo;

        double sum = 0.0;
        bool constant = true;
        const double first = targets[tree.samples[f.lo]];
        for (std::uint32_t k = f.lo; k < f.hi; ++k) {
            const double y = targets[tree.samples[k]];
            sum += y;
            constant &= y == first;
        }
        const bool depth_limited = config.max_depth && f.depth >= *config.max_depth;
        if (constant || depth_limited || count < 2 * config.min_leaf) continue;

        // Candidate features: mtry drawn without replacement, then visited in index order.
        std::iota(feature_pool.begin(), feature_pool.end(), 0u);
        for (std::size_t k = 0; k < mtry; ++k) {
            const auto pick = k + rng::below(engine, feature_pool.size() - k);
            std::swap(feature_pool[k], feature_pool[pick]);
        }
        std::sort(feature_pool.begin(), feature_pool.begin() + static_cast<std::ptrdiff_t>(mtry));

        const double parent_score = sum * sum / count;
        double best_score = parent_score;
        std::uint32_t best_feature = 0;
        double best_threshold = 0.0;
        bool found = false;

        for (std::size_t c = 0; c < mtry; ++c) {
            const auto feat = feature_pool[c];
            buf.clear();
            for (std::uint32_t k = f.lo; k < f.hi; ++k) {
                const auto s = tree.samples[k];
                buf.emplace_back(features(s, feat), targets[s]);
            }
            std::sort(buf.begin(), buf.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
            double left = 0.0;
            for (std::uint32_t k = 1; k < count; ++k) {
                left += buf[k - 1].second;
                if (k < config.min_leaf || count - k < config.min_leaf) continue;
                if (buf[k - 1].first == buf[k].first) continue;
                const double right = sum - left;
                const double score = left * left / k + right * right / (count - k);
                if (score > best_score + 1e-12 * std::max(1.0, std::abs(best_score))) {
                    best_score = score;
                    best_feature = feat;
                    const double lo = buf[k - 1].first, hi = buf[k].first;
                    double mid = lo + (hi - lo) / 2.0;
                    if (!(mid < hi)) mid = lo;
                    best_threshold = mid;
                    found = true;
                }
            }
        }
        if (!found) continue;

        auto* begin = tree.samples.data() + f.lo;
        auto* mid = std::stable_partition(begin, tree.samples.data() + f.hi, [&](std::uint32_t s) {
            return features(s, best_feature) <= best_threshold;
        });
        const auto split = static_cast<std::uint32_t>(mid - tree.samples.data());
        const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
        const auto right_id = left_id + 1;
        {
            Node& parent = tree.nodes[static_cast<std::size_t>(f.node)];
            parent.feature = best_feature;
            parent.threshold = best_threshold;
            parent.left = left_id;
            parent.right = right_id;
        }
        tree.nodes.push_back({});
        tree.nodes.push_back({});
        stack.push_back({right_id, split, f.hi, f.depth + 1});
        stack.push_back({left_id, f.lo, split, f.depth + 1});
    }
    return tree;
}

QuantileForest QuantileForest::fit(const FeatureMatrix& features, std::span<const double> targets,
                                   const ForestConfig& config) {
    if (targets.empty()) throw Error(ErrorKind::DegenerateData, "cannot fit a forest on zero rows");
    if (features.rows != targets.size() || features.values.size() != features.rows * features.cols)
        throw Error(ErrorKind::DimensionMismatch, "feature rows and targets differ");
    if (features.cols == 0) throw Error(ErrorKind::DimensionMismatch, "need at least one feature");
    if (config.n_trees == 0 || config.min_leaf == 0)
        throw Error(ErrorKind::ConfigError, "n_trees and min_leaf must be at least 1");
    const std::size_t mtry = config.mtry.value_or((features.cols + 2) / 3);
    if (mtry == 0 || mtry > features.cols)
        throw Error(ErrorKind::ConfigError, "mtry must lie in [1, " + std::to_string(features.cols) + "]");
    for (double x : features.values)
        if (std::isnan(x)) throw Error(ErrorKind::DegenerateData, "NaN feature");
    for (double y : targets)
        if (std::isnan(y)) throw Error(ErrorKind::DegenerateData, "NaN target");

    QuantileForest forest;
    forest.features_ = features.cols;
    forest.targets_.assign(targets.begin(), targets.end());
    forest.sorted_.resize(targets.size());
    std::iota(forest.sorted_.begin(), forest.sorted_.end(), 0u);
    std::stable_sort(forest.sorted_.begin(), forest.sorted_.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return targets[a] < targets[b]; });

    forest.trees_.resize(config.n_trees);
    const auto n_trees = static_cast<std::ptrdiff_t>(config.n_trees);
#pragma omp parallel for schedule(dynamic) if (config.parallel)
    for (std::ptrdiff_t t = 0; t < n_trees; ++t)
        forest.trees_[static_cast<std::size_t>(t)] =
            grow(features, targets, config, mtry, rng::derive(config.seed, static_cast<std::uint64_t>(t)));
    return forest;
}

const QuantileForest::Node& QuantileForest::leaf_for(const Tree& tree, std::span<const double> query) const {
    const Node* node = &tree.nodes.front();
    while (node->left >= 0)
        node = &tree.nodes[static_cast<std::size_t>(query[node->feature] <= node->threshold ? node->left : node->right)];
    return *node;
}

std::vector<double> QuantileForest::weights(std::span<const double> query) const {
    if (query.size() != features_)
        throw Error(ErrorKind::DimensionMismatch, "query has " + std::to_string(query.size()) + " features, forest " +
                                                      std::to_string(features_));
    std::vector<double> w(targets_.size(), 0.0);
    const double per_tree = 1.0 / static_cast<double>(trees_.size());
    for (const auto& tree : trees_) {
        const auto& leaf = leaf_for(tree, query);
        const double share = per_tree / static_cast<double>(leaf.end - leaf.begin);
        for (auto k = leaf.begin; k < leaf.end; ++k) w[tree.samples[k]] += share;
    }
    return w;
}

std::vector<double> QuantileForest::quantiles(std::span<const double> query, std::span<const double> levels) const {
    const auto w = weights(query);
    std::vector<double> out;
    out.reserve(levels.size());
    for (double level : levels) {
        // Absorbs summation rounding in the cumulative weights.
        const double target = level - 1e-12;
        double cum = 0.0;
        double value = targets_[sorted_.back()];
        for (auto k : sorted_) {
            cum += w[k];
            if (cum >= target) {
                value = targets_[k];
                break;
            }
        }
        out.push_back(value);
    }
    return out;
}

double QuantileForest::quantile(std::span<const double> query, double level) const {
    const double levels[] = {level};
    return quantiles(query, levels).front();
}

std::vector<std::vector<std::uint32_t>> QuantileForest::leaves(std::size_t t) const {
    const auto& tree = trees_.at(t);
    std::vector<std::vector<std::uint32_t>> out;
    for (const auto& node : tree.nodes)
        if (node.left < 0) out.emplace_back(tree.samples.begin() + node.begin, tree.samples.begin() + node.end);
    return out;
}

std::size_t QuantileForest::depth(std::size_t t) const {
    std::size_t d = 0;
    for (const auto& node : trees_.at(t).nodes) d = std::max<std::size_t>(d, node.depth);
    return d;
}

std::string QuantileForest::to_json() const {
    nlohmann::json j;
    j["features"] = features_;
    j["targets"] = targets_;
    auto& trees = j["trees"] = nlohmann::json::array();
    for (const auto& tree : trees_) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& node : tree.nodes) {
            if (node.left < 0)
                nodes.push_back({{"leaf", std::vector<std::uint32_t>(tree.samples.begin() + node.begin,
                                                                     tree.samples.begin() + node.end)}});
            else
                nodes.push_back({{"feature", node.feature},
                                 {"threshold", node.threshold},
                                 {"left", node.left},
                                 {"right", node.right}});
        }
        trees.push_back(nodes);
    }
    return j.dump();
}

} // namespace graphcp
