#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "conformal/dataset.hpp"
#include "conformal/scores.hpp"

namespace conformal {

/// Raised when observe() is called on a measure that cannot learn
/// incrementally (the standard variants and bootstrap).
struct NotIncrementalError : std::logic_error {
    explicit NotIncrementalError(const std::string& what) : std::logic_error(what) {}
};

/// Trained state of a nonconformity measure behind the uniform contract the
/// p-value engine needs: produce the augmented leave-one-out score vector
/// for any (test object, candidate label) pair.
///
/// Trained scorers are immutable during prediction; score_vector calls may
/// run concurrently against a shared instance. observe() requires exclusive
/// access.
class NonconformityScorer {
public:
    virtual ~NonconformityScorer() = default;

    virtual ScoreVector score_vector(std::span<const double> object, int label) const = 0;
    virtual std::size_t training_size() const = 0;
    virtual std::size_t label_count() const = 0;

    virtual bool incremental() const { return false; }

    /// Learns one new example so that subsequent predictions condition on
    /// the extended training set.
    virtual void observe(const Example&) {
        throw NotIncrementalError("measure is not incremental: observe unsupported");
    }
};

/// Full CP classification: one p-value per candidate label.
inline PValueVector classify(const NonconformityScorer& scorer, std::span<const double> object) {
    PValueVector out(scorer.label_count());
    for (std::size_t y = 0; y < scorer.label_count(); ++y) {
        int label = static_cast<int>(y);
        out[label] = compute_pvalue(scorer.score_vector(object, label));
    }
    return out;
}

struct OnlineOptions {
    bool smoothed = false;
    std::uint64_t seed = 0;
};

/// Streaming mode: for each incoming example, computes the p-value of the
/// example against everything seen so far, then learns it. Requires an
/// incremental scorer. With smoothing on, the tie weights come from a
/// generator seeded by options.seed.
inline std::vector<double> online_pvalues(NonconformityScorer& scorer,
                                          std::span<const Example> stream,
                                          const OnlineOptions& options = {}) {
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> pvalues;
    pvalues.reserve(stream.size());
    for (const Example& e : stream) {
        ScoreVector scores = scorer.score_vector(e.object, e.label);
        pvalues.push_back(options.smoothed ? compute_smoothed_pvalue(scores, unit(rng))
                                           : compute_pvalue(scores));
        scorer.observe(e);
    }
    return pvalues;
}

}  // namespace conformal
