#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "conformal/config.hpp"
#include "conformal/dataset.hpp"
#include "conformal/measures/tree.hpp"
#include "conformal/metrics.hpp"
#include "conformal/scorer.hpp"

namespace conformal {

namespace detail {

inline TreeConfig tree_config_from(const ScorerConfig& config) {
    return TreeConfig{config.tree_max_depth, config.tree_features_per_split};
}

}  // namespace detail

/// Standard bootstrap scorer: every leave-one-out score draws a fresh
/// ensemble of base trees over the conditioning set. Deterministic per seed.
class BootstrapScorer : public NonconformityScorer {
public:
    BootstrapScorer(Dataset data, const ScorerConfig& config)
        : data_(std::move(data)), ensemble_(config.ensemble_size),
          tree_config_(detail::tree_config_from(config)), seed_(config.seed) {
        config.validate();
    }

    ScoreVector score_vector(std::span<const double> object, int label) const override {
        std::size_t n = data_.size();
        std::mt19937_64 rng(detail::mix_seed(seed_, 0x626f6f74ULL));
        ScoreVector out;
        out.training.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            SetView view = SetView(data_).without(i).with(object, label);
            out.training[i] =
                -ensemble_confidence(view, rng, data_.object(i), data_.label(i));
        }
        out.test = -ensemble_confidence(SetView(data_), rng, object, label);
        return out;
    }

    std::size_t training_size() const override { return data_.size(); }
    std::size_t label_count() const override { return data_.label_count(); }

private:
    // Fraction of a freshly drawn B-tree ensemble voting for `label` at `at`.
    double ensemble_confidence(const SetView& view, std::mt19937_64& rng,
                               std::span<const double> at, int label) const {
        std::size_t m = view.size();
        if (m == 0) return 0.0;
        std::uniform_int_distribution<std::size_t> pick(0, m - 1);
        std::vector<std::span<const double>> objects(m);
        std::vector<int> labels(m);
        int votes = 0;
        for (int b = 0; b < ensemble_; ++b) {
            for (std::size_t j = 0; j < m; ++j) {
                std::size_t idx = pick(rng);
                objects[j] = view.object_at(idx);
                labels[j] = view.label_at(idx);
            }
            DecisionTree tree =
                DecisionTree::train(objects, labels, data_.label_count(), tree_config_, rng);
            if (tree.predict_label(at) == label) ++votes;
        }
        return static_cast<double>(votes) / static_cast<double>(ensemble_);
    }

    Dataset data_;
    int ensemble_;
    TreeConfig tree_config_;
    std::uint64_t seed_;
};

/// Optimized bootstrap scorer. Training augments the set with a placeholder
/// for the future test example and keeps drawing size-(n+1) bootstrap
/// samples until every point (and the placeholder) has at least B samples
/// that exclude it; each point keeps its first B. Samples free of the
/// placeholder are pretrained once and reduced to stored own-label votes;
/// samples containing it are retrained per prediction with the test example
/// substituted in, each distinct sample once, shared across the training
/// scores that reference it.
///
/// Deliberately not an exact optimization: the sampling strategy differs
/// from the standard scorer, so results may differ. observe() is
/// unsupported.
class BootstrapScorerOptimized : public NonconformityScorer {
public:
    BootstrapScorerOptimized(Dataset data, const ScorerConfig& config)
        : data_(std::move(data)), ensemble_(config.ensemble_size),
          tree_config_(detail::tree_config_from(config)), seed_(config.seed) {
        config.validate();
        if (data_.size() == 0)
            throw std::invalid_argument("bootstrap needs a non-empty training set");
        draw_samples();
        pretrain();
    }

    ScoreVector score_vector(std::span<const double> object, int label) const override {
        std::size_t n = data_.size();
        double b = static_cast<double>(ensemble_);
        // Per-call cache: each placeholder sample is retrained at most once.
        std::vector<std::unique_ptr<DecisionTree>> retrained(sample_indices_.size());
        ScoreVector out;
        out.training.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double votes = 0.0;
            const auto& sample_ids = point_samples_[i];
            for (std::size_t j = 0; j < sample_ids.size(); ++j) {
                double stored = stored_votes_[i][j];
                if (!std::isnan(stored)) {
                    votes += stored;
                    continue;
                }
                const DecisionTree& tree =
                    retrained_tree(retrained, sample_ids[j], object, label);
                if (tree.predict_label(data_.object(i)) == data_.label(i)) votes += 1.0;
            }
            out.training[i] = -votes / b;
        }
        double votes = 0.0;
        for (const DecisionTree& tree : placeholder_trees_)
            if (tree.predict_label(object) == label) votes += 1.0;
        out.test = -votes / b;
        return out;
    }

    std::size_t training_size() const override { return data_.size(); }
    std::size_t label_count() const override { return data_.label_count(); }

    /// Total bootstrap samples drawn before every point reached B.
    std::size_t draws() const { return draws_; }
    /// Samples excluding point i (i = size() for the placeholder) seen
    /// during drawing, before truncation to B.
    std::size_t pre_truncation_count(std::size_t i) const { return pre_truncation_counts_[i]; }
    const std::vector<int>& point_sample_ids(std::size_t i) const { return point_samples_[i]; }
    const std::vector<int>& placeholder_sample_ids() const { return placeholder_sample_ids_; }
    /// How many of example i's B samples were placeholder-free and hence
    /// reduced to stored votes at training time (about B/e in expectation).
    std::size_t pretrained_count(std::size_t i) const {
        std::size_t count = 0;
        for (double v : stored_votes_[i])
            if (!std::isnan(v)) ++count;
        return count;
    }
    bool sample_contains_placeholder(int id) const {
        return has_placeholder_[static_cast<std::size_t>(id)] != 0;
    }

private:
    void draw_samples() {
        std::size_t n = data_.size();
        std::size_t points = n + 1;  // training examples + placeholder
        std::size_t budget = static_cast<std::size_t>(
            1000.0 * static_cast<double>(ensemble_) * std::exp(1.0));
        std::mt19937_64 rng(seed_);
        std::uniform_int_distribution<int> pick(0, static_cast<int>(n));

        pre_truncation_counts_.assign(points, 0);
        point_samples_.assign(n, {});
        placeholder_sample_ids_.clear();
        std::size_t satisfied = 0;
        std::vector<char> present(points);
        std::size_t want = static_cast<std::size_t>(ensemble_);

        while (satisfied < points) {
            if (draws_ >= budget)
                throw std::runtime_error("bootstrap sampling did not cover every example "
                                         "within the draw budget");
            std::vector<int> sample(points);
            std::fill(present.begin(), present.end(), 0);
            for (std::size_t j = 0; j < points; ++j) {
                sample[j] = pick(rng);
                present[static_cast<std::size_t>(sample[j])] = 1;
            }
            int id = static_cast<int>(sample_indices_.size());
            for (std::size_t i = 0; i < points; ++i) {
                if (present[i]) continue;
                std::size_t count = ++pre_truncation_counts_[i];
                if (count == want) ++satisfied;
                if (count <= want) {  // keep the first B in draw order
                    if (i < n)
                        point_samples_[i].push_back(id);
                    else
                        placeholder_sample_ids_.push_back(id);
                }
            }
            has_placeholder_.push_back(present[n]);
            sample_indices_.push_back(std::move(sample));
            ++draws_;
        }
    }

    void pretrain() {
        std::size_t n = data_.size();
        constexpr double nan = std::numeric_limits<double>::quiet_NaN();
        stored_votes_.assign(n, {});
        for (std::size_t i = 0; i < n; ++i)
            stored_votes_[i].assign(point_samples_[i].size(), nan);

        // Which (point, slot) pairs reference each placeholder-free sample.
        std::vector<std::vector<std::pair<std::size_t, std::size_t>>> refs(sample_indices_.size());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < point_samples_[i].size(); ++j) {
                int b = point_samples_[i][j];
                if (!has_placeholder_[static_cast<std::size_t>(b)])
                    refs[static_cast<std::size_t>(b)].emplace_back(i, j);
            }
        std::vector<char> in_placeholder_set(sample_indices_.size(), 0);
        for (int b : placeholder_sample_ids_)
            in_placeholder_set[static_cast<std::size_t>(b)] = 1;

        for (std::size_t b = 0; b < sample_indices_.size(); ++b) {
            if (has_placeholder_[b]) continue;
            bool needed = !refs[b].empty() || in_placeholder_set[b];
            if (!needed) {
                sample_indices_[b].clear();
                continue;
            }
            DecisionTree tree = train_sample(static_cast<int>(b), {}, -1);
            for (auto [i, j] : refs[b])
                stored_votes_[i][j] =
                    tree.predict_label(data_.object(i)) == data_.label(i) ? 1.0 : 0.0;
            if (in_placeholder_set[b]) placeholder_trees_.push_back(tree);
            sample_indices_[b].clear();  // only placeholder samples are rebuilt later
        }
    }

    const DecisionTree& retrained_tree(std::vector<std::unique_ptr<DecisionTree>>& cache, int id,
                                       std::span<const double> object, int label) const {
        auto& slot = cache[static_cast<std::size_t>(id)];
        if (!slot)
            slot = std::make_unique<DecisionTree>(train_sample(id, object, label));
        return *slot;
    }

    // Trains the base tree on sample `id`, substituting (object, label) for
    // the placeholder. Seeded per sample id, so pretraining and prediction
    // are reproducible and parallel predictions stay independent.
    DecisionTree train_sample(int id, std::span<const double> object, int label) const {
        const std::vector<int>& indices = sample_indices_[static_cast<std::size_t>(id)];
        std::size_t n = data_.size();
        std::vector<std::span<const double>> objects(indices.size());
        std::vector<int> labels(indices.size());
        for (std::size_t j = 0; j < indices.size(); ++j) {
            std::size_t idx = static_cast<std::size_t>(indices[j]);
            if (idx == n) {
                objects[j] = object;
                labels[j] = label;
            } else {
                objects[j] = data_.object(idx);
                labels[j] = data_.label(idx);
            }
        }
        std::mt19937_64 rng(detail::mix_seed(seed_, static_cast<std::uint64_t>(id) + 1));
        return DecisionTree::train(objects, labels, data_.label_count(), tree_config_, rng);
    }

    Dataset data_;
    int ensemble_;
    TreeConfig tree_config_;
    std::uint64_t seed_;

    std::size_t draws_ = 0;
    std::vector<std::vector<int>> sample_indices_;  // kept only for placeholder samples
    std::vector<char> has_placeholder_;
    std::vector<std::vector<int>> point_samples_;   // per example: its B sample ids
    std::vector<int> placeholder_sample_ids_;
    std::vector<std::vector<double>> stored_votes_;  // NaN = retrain at prediction time
    std::vector<DecisionTree> placeholder_trees_;
    std::vector<std::size_t> pre_truncation_counts_;
};

}  // namespace conformal
