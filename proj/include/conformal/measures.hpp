#pragma once

#include <memory>

#include "conformal/config.hpp"
#include "conformal/dataset.hpp"
#include "conformal/measures/bootstrap.hpp"
#include "conformal/measures/kde.hpp"
#include "conformal/measures/knn.hpp"
#include "conformal/measures/lssvm.hpp"
#include "conformal/scorer.hpp"

namespace conformal {

/// Builds a trained scorer for the requested measure/variant pair.
inline std::unique_ptr<NonconformityScorer> make_scorer(const Dataset& data,
                                                        const ScorerConfig& config,
                                                        Variant variant) {
    bool optimized = variant == Variant::optimized;
    switch (config.measure) {
        case MeasureKind::nn:
        case MeasureKind::knn:
        case MeasureKind::simplified_knn:
            if (optimized) return std::make_unique<KnnScorerOptimized>(data, config);
            return std::make_unique<KnnScorer>(data, config);
        case MeasureKind::kde:
            if (optimized) return std::make_unique<KdeScorerOptimized>(data, config);
            return std::make_unique<KdeScorer>(data, config);
        case MeasureKind::lssvm:
            if (optimized) return std::make_unique<LssvmScorerOptimized>(data, config);
            return std::make_unique<LssvmScorer>(data, config);
        case MeasureKind::bootstrap:
            if (optimized) return std::make_unique<BootstrapScorerOptimized>(data, config);
            return std::make_unique<BootstrapScorer>(data, config);
    }
    throw std::logic_error("unknown measure kind");
}

}  // namespace conformal
