#pragma once

#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "conformal/config.hpp"
#include "conformal/dataset.hpp"
#include "conformal/measures/bootstrap.hpp"
#include "conformal/measures/kde.hpp"
#include "conformal/measures/knn.hpp"
#include "conformal/measures/lssvm.hpp"
#include "conformal/scores.hpp"

namespace conformal {

/// A nonconformity measure trained once on a fixed set: score arbitrary
/// (object, label) pairs against it. This is all the inductive variant needs.
class TrainedMeasure {
public:
    virtual ~TrainedMeasure() = default;
    virtual double score(std::span<const double> object, int label) const = 0;
};

namespace detail {

class KnnTrainedMeasure : public TrainedMeasure {
public:
    KnnTrainedMeasure(Dataset data, const ScorerConfig& config)
        : data_(std::move(data)), kind_(config.measure), k_(config.effective_k()),
          metric_(config.distance) {}

    double score(std::span<const double> object, int label) const override {
        return score_knn_family(kind_, SetView(data_), object, label, k_, metric_);
    }

private:
    Dataset data_;
    MeasureKind kind_;
    int k_;
    DistanceKind metric_;
};

class KdeTrainedMeasure : public TrainedMeasure {
public:
    KdeTrainedMeasure(Dataset data, const ScorerConfig& config)
        : data_(std::move(data)), bandwidth_(config.bandwidth), kernel_(config.kernel),
          metric_(config.distance) {}

    double score(std::span<const double> object, int label) const override {
        return score_kde(SetView(data_), object, label, bandwidth_, kernel_, metric_);
    }

private:
    Dataset data_;
    double bandwidth_;
    KernelKind kernel_;
    DistanceKind metric_;
};

class LssvmTrainedMeasure : public TrainedMeasure {
public:
    LssvmTrainedMeasure(const Dataset& data, const ScorerConfig& config)
        : map_(config.feature_map) {
        require_binary(data);
        std::vector<Eigen::VectorXd> feats;
        std::vector<double> targets;
        for (std::size_t i = 0; i < data.size(); ++i) {
            feats.push_back(feature_map(map_, data.object(i)));
            targets.push_back(signed_target(data.label(i)));
        }
        model_ = lssvm_train(feats, targets, config.ridge, feature_dim(map_, data.dim()));
    }

    double score(std::span<const double> object, int label) const override {
        return -signed_target(label) * model_.predict(feature_map(map_, object));
    }

private:
    FeatureMapKind map_;
    LssvmModel model_;
};

class BootstrapTrainedMeasure : public TrainedMeasure {
public:
    BootstrapTrainedMeasure(Dataset data, const ScorerConfig& config)
        : data_(std::move(data)), ensemble_(config.ensemble_size) {
        std::mt19937_64 rng(config.seed);
        std::size_t m = data_.size();
        if (m == 0) return;
        std::uniform_int_distribution<std::size_t> pick(0, m - 1);
        std::vector<std::span<const double>> objects(m);
        std::vector<int> labels(m);
        TreeConfig tree_config = tree_config_from(config);
        for (int b = 0; b < ensemble_; ++b) {
            for (std::size_t j = 0; j < m; ++j) {
                std::size_t idx = pick(rng);
                objects[j] = data_.object(idx);
                labels[j] = data_.label(idx);
            }
            trees_.push_back(
                DecisionTree::train(objects, labels, data_.label_count(), tree_config, rng));
        }
    }

    double score(std::span<const double> object, int label) const override {
        double votes = 0.0;
        for (const DecisionTree& tree : trees_)
            if (tree.predict_label(object) == label) votes += 1.0;
        return -votes / static_cast<double>(ensemble_);
    }

private:
    Dataset data_;
    int ensemble_;
    std::vector<DecisionTree> trees_;
};

}  // namespace detail

inline std::unique_ptr<TrainedMeasure> make_trained_measure(Dataset data,
                                                            const ScorerConfig& config) {
    config.validate();
    switch (config.measure) {
        case MeasureKind::nn:
        case MeasureKind::knn:
        case MeasureKind::simplified_knn:
            return std::make_unique<detail::KnnTrainedMeasure>(std::move(data), config);
        case MeasureKind::kde:
            return std::make_unique<detail::KdeTrainedMeasure>(std::move(data), config);
        case MeasureKind::lssvm:
            return std::make_unique<detail::LssvmTrainedMeasure>(data, config);
        case MeasureKind::bootstrap:
            return std::make_unique<detail::BootstrapTrainedMeasure>(std::move(data), config);
    }
    throw std::logic_error("unknown measure kind");
}

/// Inductive CP: the measure is trained on the first t examples (the proper
/// training set) and scored once on the remaining n - t (the calibration
/// set). P-values then rank a test score against the fixed calibration
/// scores, with no leave-one-out pass.
class IcpCalibration {
public:
    static IcpCalibration calibrate(const Dataset& data, std::size_t t,
                                    const ScorerConfig& config) {
        std::size_t n = data.size();
        if (t < 1 || t >= n)
            throw std::invalid_argument("icp split t must be in [1, n-1], got t=" +
                                        std::to_string(t) + " n=" + std::to_string(n));
        IcpCalibration out;
        out.label_count_ = data.label_count();
        out.split_ = t;
        out.measure_ = make_trained_measure(data.prefix(t), config);
        out.calibration_scores_.reserve(n - t);
        for (std::size_t i = t; i < n; ++i)
            out.calibration_scores_.push_back(out.measure_->score(data.object(i), data.label(i)));
        return out;
    }

    double pvalue(std::span<const double> object, int label) const {
        double test = measure_->score(object, label);
        std::size_t count = 0;
        for (double s : calibration_scores_)
            if (s >= test) ++count;
        return static_cast<double>(count + 1) /
               static_cast<double>(calibration_scores_.size() + 1);
    }

    PValueVector classify(std::span<const double> object) const {
        PValueVector out(label_count_);
        for (std::size_t y = 0; y < label_count_; ++y)
            out[static_cast<int>(y)] = pvalue(object, static_cast<int>(y));
        return out;
    }

    std::size_t split() const { return split_; }
    const std::vector<double>& calibration_scores() const { return calibration_scores_; }
    const TrainedMeasure& measure() const { return *measure_; }

private:
    std::unique_ptr<TrainedMeasure> measure_;
    std::vector<double> calibration_scores_;
    std::size_t label_count_ = 0;
    std::size_t split_ = 0;
};

}  // namespace conformal
