#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace conformal {

/// Nonconformity scores for one augmented leave-one-out pass: one score per
/// training example plus the score of the (test object, candidate label)
/// pair itself against the full training set.
struct ScoreVector {
    std::vector<double> training;
    double test = 0.0;
};

/// Rank-based p-value: (|{i : training[i] >= test}| + 1) / (n + 1).
/// Ties count as hits; an empty conditioning set yields 1.
inline double compute_pvalue(const ScoreVector& scores) {
    std::size_t count = 0;
    for (double s : scores.training)
        if (s >= scores.test) ++count;
    return static_cast<double>(count + 1) / static_cast<double>(scores.training.size() + 1);
}

/// Smoothed variant: ties (including the test example's own) enter with
/// weight tau instead of 1. tau = 1 recovers compute_pvalue.
inline double compute_smoothed_pvalue(const ScoreVector& scores, double tau) {
    std::size_t greater = 0, equal = 0;
    for (double s : scores.training) {
        if (s > scores.test)
            ++greater;
        else if (s == scores.test)
            ++equal;
    }
    double numer = static_cast<double>(greater) + tau * static_cast<double>(equal + 1);
    return numer / static_cast<double>(scores.training.size() + 1);
}

/// Per-candidate-label p-values for one test object, indexed by dense label id.
struct PValueVector {
    std::vector<double> values;

    PValueVector() = default;
    explicit PValueVector(std::size_t label_count) : values(label_count, 0.0) {}

    double& operator[](int label) { return values[static_cast<std::size_t>(label)]; }
    double operator[](int label) const { return values[static_cast<std::size_t>(label)]; }
    std::size_t label_count() const { return values.size(); }
};

/// Label subset whose p-values strictly exceed the significance level.
struct PredictionSet {
    std::vector<int> labels;  // ascending label ids
    double significance = 0.0;

    bool contains(int label) const {
        return std::binary_search(labels.begin(), labels.end(), label);
    }
};

inline PredictionSet prediction_set(const PValueVector& pvalues, double epsilon) {
    PredictionSet out;
    out.significance = epsilon;
    for (std::size_t y = 0; y < pvalues.values.size(); ++y)
        if (pvalues.values[y] > epsilon) out.labels.push_back(static_cast<int>(y));
    return out;
}

/// Sum of the p-values minus the largest one; ties subtract the max once.
/// Lower is sharper. Bounded by [0, label_count - 1].
inline double fuzziness(const PValueVector& pvalues) {
    if (pvalues.values.empty()) return 0.0;
    double sum = 0.0, max = pvalues.values.front();
    for (double p : pvalues.values) {
        sum += p;
        if (p > max) max = p;
    }
    return sum - max;
}

}  // namespace conformal
