#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace conformal {

struct TreeConfig {
    int max_depth = 10;
    int features_per_split = 0;  // 0 = floor(sqrt(dim)), at least 1
};

/// Greedy CART classifier: axis-aligned splits chosen by Gini impurity over
/// a random feature subset per node, thresholds at midpoints of consecutive
/// distinct values. Zero-gain splits are taken (ties resolved to the first
/// candidate scanned), so e.g. XOR data is still separated given enough
/// depth. Leaves hold label frequencies.
class DecisionTree {
public:
    static DecisionTree train(const std::vector<std::span<const double>>& objects,
                              const std::vector<int>& labels, std::size_t label_count,
                              const TreeConfig& config, std::mt19937_64& rng) {
        DecisionTree tree;
        tree.label_count_ = label_count;
        std::size_t dim = objects.empty() ? 0 : objects[0].size();
        int per_split = config.features_per_split;
        if (per_split <= 0)
            per_split = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(dim))));
        per_split = std::min<int>(per_split, static_cast<int>(dim));

        std::vector<std::size_t> indices(objects.size());
        std::iota(indices.begin(), indices.end(), 0);
        tree.build(objects, labels, indices, 0, config.max_depth, per_split, rng);
        return tree;
    }

    /// Leaf label frequencies for `object`; entries sum to 1.
    std::span<const double> predict(std::span<const double> object) const {
        int at = 0;
        while (nodes_[static_cast<std::size_t>(at)].feature >= 0) {
            const Node& node = nodes_[static_cast<std::size_t>(at)];
            at = object[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                  : node.right;
        }
        const Node& leaf = nodes_[static_cast<std::size_t>(at)];
        return {confidences_.data() + leaf.confidence_offset, label_count_};
    }

    /// Hard prediction: argmax confidence, ties to the smallest label id.
    int predict_label(std::span<const double> object) const {
        auto conf = predict(object);
        int best = 0;
        for (std::size_t y = 1; y < conf.size(); ++y)
            if (conf[y] > conf[static_cast<std::size_t>(best)]) best = static_cast<int>(y);
        return best;
    }

    std::size_t node_count() const { return nodes_.size(); }
    int depth() const { return depth_; }

private:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        std::size_t confidence_offset = 0;
    };

    int build(const std::vector<std::span<const double>>& objects, const std::vector<int>& labels,
              std::vector<std::size_t>& indices, int depth, int max_depth, int per_split,
              std::mt19937_64& rng) {
        depth_ = std::max(depth_, depth);
        std::vector<double> counts(label_count_, 0.0);
        for (std::size_t idx : indices) counts[static_cast<std::size_t>(labels[idx])] += 1.0;
        double m = static_cast<double>(indices.size());
        bool pure = std::any_of(counts.begin(), counts.end(),
                                [&](double c) { return c == m; });

        int feature = -1;
        double threshold = 0.0;
        if (!pure && depth < max_depth)
            pick_split(objects, labels, indices, per_split, rng, feature, threshold);

        if (feature < 0) {
            int id = static_cast<int>(nodes_.size());
            Node leaf;
            leaf.confidence_offset = confidences_.size();
            for (double c : counts) confidences_.push_back(c / m);
            nodes_.push_back(leaf);
            return id;
        }

        std::vector<std::size_t> left, right;
        for (std::size_t idx : indices) {
            if (objects[idx][static_cast<std::size_t>(feature)] <= threshold)
                left.push_back(idx);
            else
                right.push_back(idx);
        }
        indices.clear();
        indices.shrink_to_fit();

        int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        nodes_[static_cast<std::size_t>(id)].feature = feature;
        nodes_[static_cast<std::size_t>(id)].threshold = threshold;
        int l = build(objects, labels, left, depth + 1, max_depth, per_split, rng);
        int r = build(objects, labels, right, depth + 1, max_depth, per_split, rng);
        nodes_[static_cast<std::size_t>(id)].left = l;
        nodes_[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    void pick_split(const std::vector<std::span<const double>>& objects,
                    const std::vector<int>& labels, const std::vector<std::size_t>& indices,
                    int per_split, std::mt19937_64& rng, int& best_feature,
                    double& best_threshold) const {
        std::size_t dim = objects[indices[0]].size();
        std::vector<int> features(dim);
        std::iota(features.begin(), features.end(), 0);
        // partial Fisher-Yates: the first per_split entries are the candidates
        for (int i = 0; i < per_split; ++i) {
            std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), dim - 1);
            std::swap(features[static_cast<std::size_t>(i)], features[pick(rng)]);
        }

        double m = static_cast<double>(indices.size());
        std::vector<double> total(label_count_, 0.0);
        for (std::size_t idx : indices) total[static_cast<std::size_t>(labels[idx])] += 1.0;
        double parent_gini = gini(total, m);

        double best_gain = -1.0;
        std::vector<std::pair<double, int>> column(indices.size());
        std::vector<double> left_counts(label_count_);
        for (int fi = 0; fi < per_split; ++fi) {
            int f = features[static_cast<std::size_t>(fi)];
            for (std::size_t r = 0; r < indices.size(); ++r)
                column[r] = {objects[indices[r]][static_cast<std::size_t>(f)], labels[indices[r]]};
            std::sort(column.begin(), column.end());
            std::fill(left_counts.begin(), left_counts.end(), 0.0);
            for (std::size_t r = 0; r + 1 < column.size(); ++r) {
                left_counts[static_cast<std::size_t>(column[r].second)] += 1.0;
                if (column[r].first == column[r + 1].first) continue;
                double ml = static_cast<double>(r + 1);
                double mr = m - ml;
                double impurity = 0.0;
                for (std::size_t y = 0; y < label_count_; ++y) {
                    double cl = left_counts[y];
                    double cr = total[y] - cl;
                    impurity += cl * cl / ml + cr * cr / mr;
                }
                // weighted child Gini = 1 - impurity / m; gain relative to parent
                double gain = parent_gini - (1.0 - impurity / m);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = f;
                    best_threshold = (column[r].first + column[r + 1].first) / 2.0;
                }
            }
        }
    }

    static double gini(const std::vector<double>& counts, double m) {
        double s = 0.0;
        for (double c : counts) s += c * c;
        return 1.0 - s / (m * m);
    }

    std::vector<Node> nodes_;
    std::vector<double> confidences_;
    std::size_t label_count_ = 0;
    int depth_ = 0;
};

}  // namespace conformal
