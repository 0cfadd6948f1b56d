#pragma once

#include <algorithm>
#include <limits>
#include <span>
#include <vector>

#include "conformal/config.hpp"
#include "conformal/dataset.hpp"
#include "conformal/metrics.hpp"
#include "conformal/scorer.hpp"

namespace conformal {

namespace detail {

// Keeps the k smallest entries of `vals`, sorted ascending (partial
// selection via introselect, then an O(k log k) sort of the prefix).
inline void keep_k_smallest_sorted(std::vector<double>& vals, int k) {
    std::size_t take = std::min<std::size_t>(vals.size(), static_cast<std::size_t>(k));
    std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(take), vals.end());
    vals.resize(take);
    std::sort(vals.begin(), vals.end());
}

// Left-to-right sum. All distance sums in this module go through ascending
// accumulation so the standard and optimized variants produce identical
// floating-point results.
inline double ascending_sum(const std::vector<double>& sorted) {
    double s = 0.0;
    for (double v : sorted) s += v;
    return s;
}

inline double sum_k_smallest(std::vector<double>& vals, int k) {
    keep_k_smallest_sorted(vals, k);
    return ascending_sum(vals);
}

// Ascending-order sum of the min(k, size+1) smallest values of the multiset
// sorted ∪ {extra}. This is the optimized-update path: same values, same
// accumulation order as a from-scratch recomputation.
inline double merged_sum(const std::vector<double>& sorted, double extra, int k) {
    std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), sorted.size() + 1);
    double s = 0.0;
    std::size_t idx = 0;
    bool extra_used = false;
    for (std::size_t used = 0; used < take; ++used) {
        if (!extra_used && (idx >= sorted.size() || extra <= sorted[idx])) {
            s += extra;
            extra_used = true;
        } else {
            s += sorted[idx++];
        }
    }
    return s;
}

// Inserts d into a sorted k-bounded list if it belongs among the k smallest.
inline void insert_bounded(std::vector<double>& sorted, double d, int k) {
    if (sorted.size() < static_cast<std::size_t>(k)) {
        sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), d), d);
    } else if (!sorted.empty() && d < sorted.back()) {
        sorted.pop_back();
        sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), d), d);
    }
}

}  // namespace detail

/// Ratio of same-label to different-label k-distance sums with the shared
/// degenerate conventions: both categories empty -> 0; no same-label
/// examples -> +inf (maximally nonconforming); no different-label
/// examples -> 0 (maximally conforming); zero denominator sum follows the
/// same limits.
inline double knn_ratio(double same_sum, bool same_empty, double diff_sum, bool diff_empty) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (same_empty && diff_empty) return 0.0;
    if (same_empty) return inf;
    if (diff_empty) return 0.0;
    if (diff_sum == 0.0) return same_sum == 0.0 ? 0.0 : inf;
    return same_sum / diff_sum;
}

/// Sum of the k smallest distances from `object` to same-label members of
/// the conditioning set; +inf when the label is unseen there.
inline double score_simplified_knn(const SetView& conditioning, std::span<const double> object,
                                   int label, int k,
                                   DistanceKind metric = DistanceKind::euclidean) {
    std::vector<double> same;
    conditioning.for_each([&](std::span<const double> x, int y) {
        if (y == label) same.push_back(distance(metric, object, x));
    });
    if (same.empty()) return std::numeric_limits<double>::infinity();
    return detail::sum_k_smallest(same, k);
}

/// k-NN nonconformity score: same-label distance sum over different-label
/// distance sum, k smallest each (all available when fewer than k exist).
inline double score_knn(const SetView& conditioning, std::span<const double> object, int label,
                        int k, DistanceKind metric = DistanceKind::euclidean) {
    std::vector<double> same, diff;
    conditioning.for_each([&](std::span<const double> x, int y) {
        double d = distance(metric, object, x);
        if (y == label)
            same.push_back(d);
        else
            diff.push_back(d);
    });
    bool same_empty = same.empty(), diff_empty = diff.empty();
    double same_sum = same_empty ? 0.0 : detail::sum_k_smallest(same, k);
    double diff_sum = diff_empty ? 0.0 : detail::sum_k_smallest(diff, k);
    return knn_ratio(same_sum, same_empty, diff_sum, diff_empty);
}

/// Nearest-neighbor score: the k = 1 case of score_knn.
inline double score_nn(const SetView& conditioning, std::span<const double> object, int label,
                       DistanceKind metric = DistanceKind::euclidean) {
    return score_knn(conditioning, object, label, 1, metric);
}

namespace detail {

inline double score_knn_family(MeasureKind kind, const SetView& view,
                               std::span<const double> object, int label, int k,
                               DistanceKind metric) {
    if (kind == MeasureKind::simplified_knn)
        return score_simplified_knn(view, object, label, k, metric);
    return score_knn(view, object, label, k, metric);
}

}  // namespace detail

/// Standard (recompute-from-scratch) scorer for the nearest-neighbor family.
/// No training phase; every score runs a full pass over the conditioning set.
class KnnScorer : public NonconformityScorer {
public:
    KnnScorer(Dataset data, const ScorerConfig& config)
        : data_(std::move(data)), kind_(config.measure), k_(config.effective_k()),
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
                detail::score_knn_family(kind_, view, data_.object(i), data_.label(i), k_, metric_);
        }
        out.test = detail::score_knn_family(kind_, SetView(data_), object, label, k_, metric_);
        return out;
    }

    std::size_t training_size() const override { return data_.size(); }
    std::size_t label_count() const override { return data_.label_count(); }

private:
    Dataset data_;
    MeasureKind kind_;
    int k_;
    DistanceKind metric_;
};

/// Optimized nearest-neighbor scorer. Training precomputes, per example,
/// the sorted k smallest same-label (and, for the ratio measures,
/// different-label) neighbor distances and their sums. A prediction then
/// touches each training score in O(1): the test point only perturbs the
/// lists it actually enters. Supports incremental observe().
class KnnScorerOptimized : public NonconformityScorer {
public:
    KnnScorerOptimized(Dataset data, const ScorerConfig& config)
        : data_(std::move(data)), kind_(config.measure), k_(config.effective_k()),
          metric_(config.distance) {
        config.validate();
        rebuild();
    }

    ScoreVector score_vector(std::span<const double> object, int label) const override {
        std::size_t n = data_.size();
        ScoreVector out;
        out.training.resize(n);
        std::vector<double> dist_to_test(n);
        for (std::size_t i = 0; i < n; ++i)
            dist_to_test[i] = distance(metric_, data_.object(i), object);

        for (std::size_t i = 0; i < n; ++i) {
            bool test_same = (label == data_.label(i));
            double d = dist_to_test[i];

            double same_sum;
            bool same_empty;
            if (test_same) {
                same_empty = false;
                same_sum = displaces(same_best_[i], d) ? detail::merged_sum(same_best_[i], d, k_)
                                                       : same_sum_[i];
            } else {
                same_empty = same_best_[i].empty();
                same_sum = same_sum_[i];
            }

            if (kind_ == MeasureKind::simplified_knn) {
                out.training[i] =
                    same_empty ? std::numeric_limits<double>::infinity() : same_sum;
                continue;
            }

            double diff_sum;
            bool diff_empty;
            if (!test_same) {
                diff_empty = false;
                diff_sum = displaces(diff_best_[i], d) ? detail::merged_sum(diff_best_[i], d, k_)
                                                       : diff_sum_[i];
            } else {
                diff_empty = diff_best_[i].empty();
                diff_sum = diff_sum_[i];
            }
            out.training[i] = knn_ratio(same_sum, same_empty, diff_sum, diff_empty);
        }
        out.test = detail::score_knn_family(kind_, SetView(data_), object, label, k_, metric_);
        return out;
    }

    std::size_t training_size() const override { return data_.size(); }
    std::size_t label_count() const override { return data_.label_count(); }
    bool incremental() const override { return true; }

    void observe(const Example& example) override {
        std::size_t n = data_.size();
        std::vector<double> dists(n);
        for (std::size_t i = 0; i < n; ++i)
            dists[i] = distance(metric_, data_.object(i), example.object);

        for (std::size_t i = 0; i < n; ++i) {
            bool same = (example.label == data_.label(i));
            if (same) {
                detail::insert_bounded(same_best_[i], dists[i], k_);
                same_sum_[i] = detail::ascending_sum(same_best_[i]);
            } else if (tracks_diff()) {
                detail::insert_bounded(diff_best_[i], dists[i], k_);
                diff_sum_[i] = detail::ascending_sum(diff_best_[i]);
            }
        }

        std::vector<double> same, diff;
        for (std::size_t i = 0; i < n; ++i) {
            if (data_.label(i) == example.label)
                same.push_back(dists[i]);
            else if (tracks_diff())
                diff.push_back(dists[i]);
        }
        detail::keep_k_smallest_sorted(same, k_);
        same_best_.push_back(std::move(same));
        same_sum_.push_back(detail::ascending_sum(same_best_.back()));
        if (tracks_diff()) {
            detail::keep_k_smallest_sorted(diff, k_);
            diff_best_.push_back(std::move(diff));
            diff_sum_.push_back(detail::ascending_sum(diff_best_.back()));
        }
        data_.add(example);
    }

    /// Stored k-th smallest same-label distance (the update threshold);
    /// +inf while the example has fewer than k same-label peers.
    double kth_same_distance(std::size_t i) const {
        if (same_best_[i].size() < static_cast<std::size_t>(k_))
            return std::numeric_limits<double>::infinity();
        return same_best_[i].back();
    }

    double provisional_score(std::size_t i) const {
        if (kind_ == MeasureKind::simplified_knn)
            return same_best_[i].empty() ? std::numeric_limits<double>::infinity() : same_sum_[i];
        return knn_ratio(same_sum_[i], same_best_[i].empty(), diff_sum_[i], diff_best_[i].empty());
    }

private:
    bool tracks_diff() const { return kind_ != MeasureKind::simplified_knn; }

    // The test point enters the k-list iff the list is not yet full or it
    // strictly beats the current k-th distance.
    bool displaces(const std::vector<double>& list, double d) const {
        return list.size() < static_cast<std::size_t>(k_) || d < list.back();
    }

    void rebuild() {
        std::size_t n = data_.size();
        same_best_.assign(n, {});
        same_sum_.assign(n, 0.0);
        if (tracks_diff()) {
            diff_best_.assign(n, {});
            diff_sum_.assign(n, 0.0);
        }
        std::vector<double> same, diff;
        for (std::size_t i = 0; i < n; ++i) {
            same.clear();
            diff.clear();
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                double d = distance(metric_, data_.object(i), data_.object(j));
                if (data_.label(j) == data_.label(i))
                    same.push_back(d);
                else if (tracks_diff())
                    diff.push_back(d);
            }
            detail::keep_k_smallest_sorted(same, k_);
            same_best_[i] = same;
            same_sum_[i] = detail::ascending_sum(same);
            if (tracks_diff()) {
                detail::keep_k_smallest_sorted(diff, k_);
                diff_best_[i] = diff;
                diff_sum_[i] = detail::ascending_sum(diff);
            }
        }
    }

    Dataset data_;
    MeasureKind kind_;
    int k_;
    DistanceKind metric_;
    std::vector<std::vector<double>> same_best_;
    std::vector<std::vector<double>> diff_best_;
    std::vector<double> same_sum_;
    std::vector<double> diff_sum_;
};

}  // namespace conformal
