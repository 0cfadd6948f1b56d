#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "conformal/config.hpp"
#include "conformal/dataset.hpp"
#include "conformal/metrics.hpp"
#include "conformal/scorer.hpp"

namespace conformal {

/// Kernel density nonconformity score: the negated label-conditional density
/// estimate -(1 / (n_y h^p)) * sum over same-label members of K(d / h).
/// No same-label members (n_y = 0) -> 0, the supremum of the range.
inline double score_kde(const SetView& conditioning, std::span<const double> object, int label,
                        double bandwidth, KernelKind kernel = KernelKind::gaussian,
                        DistanceKind metric = DistanceKind::euclidean) {
    std::size_t dim = object.size();
    CompensatedSum acc;
    std::size_t count = 0;
    conditioning.for_each([&](std::span<const double> x, int y) {
        if (y != label) return;
        acc.add(kernel_at_distance(kernel, distance(metric, object, x), bandwidth, dim));
        ++count;
    });
    if (count == 0) return 0.0;
    double norm = static_cast<double>(count) * std::pow(bandwidth, static_cast<double>(dim));
    return -acc.value() / norm;
}

/// Standard KDE scorer: every score re-sums the kernel over the
/// conditioning set.
class KdeScorer : public NonconformityScorer {
public:
    KdeScorer(Dataset data, const ScorerConfig& config)
        : data_(std::move(data)), bandwidth_(config.bandwidth), kernel_(config.kernel),
          metric_(config.distance) {
        config.validate();
    }

    ScoreVector score_vector(std::span<const double> object, int label) const override {
        std::size_t n = data_.size();
        ScoreVector out;
        out.training.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            SetView view = SetView(data_).without(i).with(object, label);
            out.training[i] =
                score_kde(view, data_.object(i), data_.label(i), bandwidth_, kernel_, metric_);
        }
        out.test = score_kde(SetView(data_), object, label, bandwidth_, kernel_, metric_);
        return out;
    }

    std::size_t training_size() const override { return data_.size(); }
    std::size_t label_count() const override { return data_.label_count(); }

private:
    Dataset data_;
    double bandwidth_;
    KernelKind kernel_;
    DistanceKind metric_;
};

/// Optimized KDE scorer. Training stores, per example, the kernel sum over
/// its same-label peers; a prediction only adds the one kernel term the test
/// point contributes. Supports incremental observe().
class KdeScorerOptimized : public NonconformityScorer {
public:
    KdeScorerOptimized(Dataset data, const ScorerConfig& config)
        : data_(std::move(data)), bandwidth_(config.bandwidth), kernel_(config.kernel),
          metric_(config.distance) {
        config.validate();
        rebuild();
    }

    ScoreVector score_vector(std::span<const double> object, int label) const override {
        std::size_t n = data_.size();
        std::size_t dim = data_.dim();
        double hp = std::pow(bandwidth_, static_cast<double>(dim));
        ScoreVector out;
        out.training.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            int yi = data_.label(i);
            if (yi == label) {
                // Test example joins x_i's label class: n_y stays at the
                // full-dataset count (minus self, plus test).
                double term = kernel_at_distance(
                    kernel_, distance(metric_, data_.object(i), object), bandwidth_, dim);
                double count = static_cast<double>(label_counts_[static_cast<std::size_t>(yi)]);
                out.training[i] = -(peer_kernel_sum_[i] + term) / (count * hp);
            } else {
                std::size_t count = label_counts_[static_cast<std::size_t>(yi)] - 1;
                out.training[i] =
                    count == 0 ? 0.0 : -peer_kernel_sum_[i] / (static_cast<double>(count) * hp);
            }
        }
        out.test = score_kde(SetView(data_), object, label, bandwidth_, kernel_, metric_);
        return out;
    }

    std::size_t training_size() const override { return data_.size(); }
    std::size_t label_count() const override { return data_.label_count(); }
    bool incremental() const override { return true; }

    void observe(const Example& example) override {
        std::size_t n = data_.size();
        std::size_t dim = data_.dim();
        CompensatedSum own;
        for (std::size_t i = 0; i < n; ++i) {
            if (data_.label(i) != example.label) continue;
            double term = kernel_at_distance(
                kernel_, distance(metric_, data_.object(i), example.object), bandwidth_, dim);
            peer_kernel_sum_[i] += term;
            own.add(term);
        }
        peer_kernel_sum_.push_back(own.value());
        label_counts_[static_cast<std::size_t>(example.label)] += 1;
        data_.add(example);
    }

    double peer_kernel_sum(std::size_t i) const { return peer_kernel_sum_[i]; }

private:
    void rebuild() {
        std::size_t n = data_.size();
        std::size_t dim = data_.dim();
        peer_kernel_sum_.assign(n, 0.0);
        label_counts_.assign(data_.label_count(), 0);
        for (std::size_t i = 0; i < n; ++i)
            label_counts_[static_cast<std::size_t>(data_.label(i))] += 1;
        for (std::size_t i = 0; i < n; ++i) {
            CompensatedSum acc;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i || data_.label(j) != data_.label(i)) continue;
                acc.add(kernel_at_distance(
                    kernel_, distance(metric_, data_.object(i), data_.object(j)), bandwidth_, dim));
            }
            peer_kernel_sum_[i] = acc.value();
        }
    }

    Dataset data_;
    double bandwidth_;
    KernelKind kernel_;
    DistanceKind metric_;
    std::vector<double> peer_kernel_sum_;     // per example: kernel sum over same-label peers
    std::vector<std::size_t> label_counts_;   // per label id
};

}  // namespace conformal
