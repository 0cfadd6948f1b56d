#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "conformal/metrics.hpp"

namespace conformal {

enum class MeasureKind { nn, knn, simplified_knn, kde, lssvm, bootstrap };
enum class Variant { standard, optimized };
enum class FeatureMapKind { identity, quadratic };

/// Hyperparameters shared by all measures. Defaults follow the usual
/// choices for these models: Euclidean k = 15 neighbors, Gaussian bandwidth
/// 1, ridge 1, 10 trees of depth 10 splitting on sqrt(p) features.
struct ScorerConfig {
    MeasureKind measure = MeasureKind::knn;
    int k = 15;
    double bandwidth = 1.0;          // KDE h
    double ridge = 1.0;              // LS-SVM regularizer
    int ensemble_size = 10;          // bootstrap B
    int tree_max_depth = 10;
    int tree_features_per_split = 0; // 0 = sqrt(dim), resolved at train time
    DistanceKind distance = DistanceKind::euclidean;
    KernelKind kernel = KernelKind::gaussian;
    FeatureMapKind feature_map = FeatureMapKind::identity;
    std::uint64_t seed = 0;

    void validate() const {
        if (k < 1) throw std::invalid_argument("k must be >= 1");
        if (bandwidth <= 0.0) throw std::invalid_argument("bandwidth must be > 0");
        if (ridge <= 0.0) throw std::invalid_argument("ridge must be > 0");
        if (ensemble_size < 1) throw std::invalid_argument("ensemble size must be >= 1");
        if (tree_max_depth < 0) throw std::invalid_argument("tree depth must be >= 0");
        if (tree_features_per_split < 0)
            throw std::invalid_argument("features per split must be >= 0");
    }

    /// Neighbor count actually used: the plain NN measure is pinned to k=1.
    int effective_k() const { return measure == MeasureKind::nn ? 1 : k; }
};

inline std::string to_string(MeasureKind m) {
    switch (m) {
        case MeasureKind::nn: return "nn";
        case MeasureKind::knn: return "knn";
        case MeasureKind::simplified_knn: return "simplified-knn";
        case MeasureKind::kde: return "kde";
        case MeasureKind::lssvm: return "lssvm";
        case MeasureKind::bootstrap: return "bootstrap";
    }
    return "?";
}

inline std::string to_string(Variant v) {
    return v == Variant::standard ? "standard" : "optimized";
}

inline MeasureKind measure_from_string(const std::string& s) {
    if (s == "nn") return MeasureKind::nn;
    if (s == "knn") return MeasureKind::knn;
    if (s == "simplified-knn" || s == "sknn") return MeasureKind::simplified_knn;
    if (s == "kde") return MeasureKind::kde;
    if (s == "lssvm") return MeasureKind::lssvm;
    if (s == "bootstrap") return MeasureKind::bootstrap;
    throw std::invalid_argument("unknown measure: " + s);
}

}  // namespace conformal
