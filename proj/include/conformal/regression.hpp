#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "conformal/dataset.hpp"
#include "conformal/metrics.hpp"

namespace conformal {

/// Union of disjoint intervals over the candidate-label line. Finite
/// endpoints carry closedness flags; infinite endpoints are open.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool lo_closed = true;
    bool hi_closed = true;

    bool contains(double y) const {
        if (y < lo || y > hi) return false;
        if (y == lo && !lo_closed) return false;
        if (y == hi && !hi_closed) return false;
        return true;
    }
};

struct IntervalSet {
    std::vector<Interval> intervals;  // sorted, pairwise disjoint

    bool contains(double y) const {
        for (const Interval& iv : intervals)
            if (iv.contains(y)) return true;
        return false;
    }
    bool empty() const { return intervals.empty(); }
};

/// Per-candidate-label nonconformity scores in affine form: training score
/// i is |offsets[i] + slopes[i] * y|, the test score is |test_offset + y|.
/// slopes[i] is -1/k when the test object displaces example i's k-th
/// neighbor, 0 otherwise.
struct RegressionCoefficients {
    std::vector<double> offsets;
    std::vector<double> slopes;
    double test_offset = 0.0;

    std::size_t size() const { return offsets.size(); }
};

namespace detail {

struct NeighborStats {
    double target_sum = 0.0;    // ascending-order sum of the k nearest targets
    double kth_target = 0.0;    // target of the k-th nearest
    double kth_distance = 0.0;  // distance to the k-th nearest
};

// k nearest rows of `data` to `at` (optionally skipping one index), ordered
// by (distance, index). Requires at least k candidates.
inline NeighborStats neighbor_stats(const Dataset& data, std::ptrdiff_t skip,
                                    std::span<const double> at, int k, DistanceKind metric,
                                    std::vector<std::pair<double, std::size_t>>* all = nullptr) {
    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(data.size());
    for (std::size_t j = 0; j < data.size(); ++j) {
        if (static_cast<std::ptrdiff_t>(j) == skip) continue;
        cand.emplace_back(distance(metric, data.object(j), at), j);
    }
    std::size_t take = static_cast<std::size_t>(k);
    if (k < 1 || take > cand.size())
        throw std::invalid_argument("neighbor_stats: need k in [1, candidates]");
    std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take - 1),
                     cand.end());
    std::sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take));
    NeighborStats out;
    for (std::size_t r = 0; r < take; ++r) out.target_sum += data.target(cand[r].second);
    out.kth_target = data.target(cand[take - 1].second);
    out.kth_distance = cand[take - 1].first;
    if (all) *all = std::move(cand);
    return out;
}

// Offset of the test example: minus the mean of the k nearest training targets.
inline double test_offset(const Dataset& data, std::span<const double> at, int k,
                          DistanceKind metric) {
    NeighborStats stats = neighbor_stats(data, -1, at, k, metric);
    return -stats.target_sum / static_cast<double>(k);
}

inline void require_regression_size(const Dataset& data, int k) {
    if (data.size() < static_cast<std::size_t>(k) + 1)
        throw std::invalid_argument("regression needs at least k+1 training examples");
}

}  // namespace detail

/// Baseline coefficients: recomputes every example's k nearest neighbors in
/// the augmented set from scratch, O(n^2) distances per prediction. The
/// test object enters an example's neighborhood only by strictly beating
/// its k-th training neighbor (distance ties resolved by training index).
inline RegressionCoefficients reg_coefficients_baseline(const Dataset& data,
                                                        std::span<const double> object, int k,
                                                        DistanceKind metric =
                                                            DistanceKind::euclidean) {
    detail::require_regression_size(data, k);
    std::size_t n = data.size();
    double kd = static_cast<double>(k);
    RegressionCoefficients out;
    out.offsets.resize(n);
    out.slopes.resize(n);
    out.test_offset = detail::test_offset(data, object, k, metric);

    std::vector<std::pair<double, std::size_t>> peers;
    for (std::size_t i = 0; i < n; ++i) {
        detail::NeighborStats stats = detail::neighbor_stats(
            data, static_cast<std::ptrdiff_t>(i), data.object(i), k, metric, &peers);
        // Literal membership test: the test object ranks after every peer
        // at equal distance, so it is among the k nearest of the augmented
        // neighborhood iff at most k-1 peers are at least as close.
        double d_test = distance(metric, data.object(i), object);
        std::size_t at_least_as_close = 0;
        for (const auto& [d, j] : peers)
            if (d <= d_test) ++at_least_as_close;
        if (at_least_as_close <= static_cast<std::size_t>(k) - 1) {
            // Displacement drops the k-th neighbor: subtract it from the sum
            // before dividing, so at k=1 the offset is exactly target(i) and
            // exact score ties stay exact.
            out.offsets[i] = data.target(i) - (stats.target_sum - stats.kth_target) / kd;
            out.slopes[i] = -1.0 / kd;
        } else {
            out.offsets[i] = data.target(i) - stats.target_sum / kd;
            out.slopes[i] = 0.0;
        }
    }
    return out;
}

/// Optimized k-NN regression state: training stores each example's
/// ascending neighbor-target sum, k-th neighbor target, and k-th neighbor
/// distance; a prediction needs only the n distances to the test object.
class KnnRegressionState {
public:
    KnnRegressionState(Dataset data, int k, DistanceKind metric = DistanceKind::euclidean)
        : data_(std::move(data)), k_(k), metric_(metric) {
        detail::require_regression_size(data_, k_);
        std::size_t n = data_.size();
        neighbor_target_sum_.resize(n);
        kth_neighbor_target_.resize(n);
        kth_neighbor_distance_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            detail::NeighborStats stats = detail::neighbor_stats(
                data_, static_cast<std::ptrdiff_t>(i), data_.object(i), k_, metric_);
            neighbor_target_sum_[i] = stats.target_sum;
            kth_neighbor_target_[i] = stats.kth_target;
            kth_neighbor_distance_[i] = stats.kth_distance;
        }
    }

    RegressionCoefficients coefficients(std::span<const double> object) const {
        std::size_t n = data_.size();
        double kd = static_cast<double>(k_);
        RegressionCoefficients out;
        out.offsets.resize(n);
        out.slopes.resize(n);
        out.test_offset = detail::test_offset(data_, object, k_, metric_);
        for (std::size_t i = 0; i < n; ++i) {
            double d = distance(metric_, data_.object(i), object);
            if (d < kth_neighbor_distance_[i]) {
                out.offsets[i] = data_.target(i) -
                                 (neighbor_target_sum_[i] - kth_neighbor_target_[i]) / kd;
                out.slopes[i] = -1.0 / kd;
            } else {
                out.offsets[i] = data_.target(i) - neighbor_target_sum_[i] / kd;
                out.slopes[i] = 0.0;
            }
        }
        return out;
    }

    const Dataset& data() const { return data_; }
    int k() const { return k_; }

private:
    Dataset data_;
    int k_;
    DistanceKind metric_;
    std::vector<double> neighbor_target_sum_;
    std::vector<double> kth_neighbor_target_;
    std::vector<double> kth_neighbor_distance_;
};

/// P-value of one candidate label: rank of the test score among the
/// training scores, self-count included.
inline double reg_pvalue_at(const RegressionCoefficients& coeffs, double y) {
    double test = std::abs(coeffs.test_offset + y);
    std::size_t count = 0;
    for (std::size_t i = 0; i < coeffs.size(); ++i)
        if (std::abs(coeffs.offsets[i] + coeffs.slopes[i] * y) >= test) ++count;
    return static_cast<double>(count + 1) / static_cast<double>(coeffs.size() + 1);
}

namespace detail {

// Candidate-label set where training score i ties or beats the test score.
// Score curves are absolute values of affine functions; equality happens on
// the solutions of the two sign-resolved linear equations.
struct SatisfiedSet {
    bool always = false;  // identical curves: ties for every candidate
    double lo = 0.0;      // otherwise a closed interval, rays via +-inf
    double hi = 0.0;
};

inline SatisfiedSet satisfied_set(double offset, double slope, double test_offset) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    SatisfiedSet out;
    if (slope == -1.0) {
        // Equal slopes: |offset - y| vs |test_offset + y|. One crossing,
        // unless the curves coincide.
        if (offset + test_offset == 0.0) {
            out.always = true;
            return out;
        }
        double crossing = (offset - test_offset) / 2.0;
        if (offset + test_offset > 0.0) {  // ties-or-beats to the left
            out.lo = -inf;
            out.hi = crossing;
        } else {
            out.lo = crossing;
            out.hi = inf;
        }
        return out;
    }
    // |slope| < 1: the test score grows faster on both sides, so the
    // satisfied set is the closed interval between the two crossings.
    double r1 = (test_offset - offset) / (slope - 1.0);
    double r2 = -(test_offset + offset) / (slope + 1.0);
    out.lo = std::min(r1, r2);
    out.hi = std::max(r1, r2);
    return out;
}

}  // namespace detail

/// Prediction set {y : p(y) > epsilon} as a union of intervals. Critical
/// points are where any training score crosses the test score; the count of
/// satisfied training scores is swept across the resulting cells (each open
/// cell and each critical point evaluated once). Closed finite endpoints;
/// rays and the full line are representable.
inline IntervalSet reg_prediction_set(const RegressionCoefficients& coeffs, double epsilon) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::size_t n = coeffs.size();
    double denom = static_cast<double>(n + 1);

    std::size_t always = 0;
    std::size_t from_left = 0;                       // sets reaching -inf
    std::map<double, std::pair<int, int>> events;    // point -> (starts, ends)
    for (std::size_t i = 0; i < n; ++i) {
        detail::SatisfiedSet s =
            detail::satisfied_set(coeffs.offsets[i], coeffs.slopes[i], coeffs.test_offset);
        if (s.always) {
            ++always;
            continue;
        }
        if (s.lo == -inf)
            ++from_left;
        else
            events[s.lo].first += 1;
        if (s.hi != inf) events[s.hi].second += 1;
    }

    // Cells alternate: (-inf, t1), {t1}, (t1, t2), ..., {tM}, (tM, +inf).
    struct Cell {
        double lo, hi;
        bool point;
        bool qualifies;
    };
    std::vector<Cell> cells;
    std::size_t active = from_left;
    auto qualifies = [&](std::size_t satisfied) {
        return (static_cast<double>(satisfied + always + 1) / denom) > epsilon;
    };
    double prev = -inf;
    for (const auto& [point, counts] : events) {
        cells.push_back({prev, point, false, qualifies(active)});
        cells.push_back({point, point, true, qualifies(active + static_cast<std::size_t>(counts.first))});
        active += static_cast<std::size_t>(counts.first);
        active -= static_cast<std::size_t>(counts.second);
        prev = point;
    }
    cells.push_back({prev, inf, false, qualifies(active)});

    IntervalSet out;
    std::size_t i = 0;
    while (i < cells.size()) {
        if (!cells[i].qualifies) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < cells.size() && cells[j + 1].qualifies) ++j;
        Interval iv;
        iv.lo = cells[i].lo;
        iv.hi = cells[j].hi;
        iv.lo_closed = std::isfinite(iv.lo);
        iv.hi_closed = std::isfinite(iv.hi);
        out.intervals.push_back(iv);
        i = j + 1;
    }
    return out;
}

/// Inductive k-NN regression: point prediction from the proper training
/// set's k nearest neighbors, half-width from the calibration residual
/// quantile at level 1 - epsilon.
class IcpRegression {
public:
    IcpRegression(const Dataset& data, std::size_t t, int k,
                  DistanceKind metric = DistanceKind::euclidean)
        : k_(k), metric_(metric) {
        std::size_t n = data.size();
        if (t < 1 || t >= n)
            throw std::invalid_argument("icp split t must be in [1, n-1]");
        if (k < 1 || static_cast<std::size_t>(k) > t)
            throw std::invalid_argument("icp regression needs 1 <= k <= t");
        proper_ = data.prefix(t);
        residuals_.reserve(n - t);
        for (std::size_t i = t; i < n; ++i)
            residuals_.push_back(std::abs(data.target(i) - point_prediction(data.object(i))));
        std::sort(residuals_.begin(), residuals_.end());
    }

    double point_prediction(std::span<const double> object) const {
        return -detail::test_offset(proper_, object, k_, metric_);
    }

    IntervalSet predict(std::span<const double> object, double epsilon) const {
        std::size_t m = residuals_.size();
        double raw = std::ceil((1.0 - epsilon) * static_cast<double>(m + 1));
        std::size_t rank = raw < 1.0 ? 1 : static_cast<std::size_t>(raw);
        if (rank > m) rank = m;  // epsilon ~ 0 clamps to the max residual
        double half = residuals_[rank - 1];
        double center = point_prediction(object);
        IntervalSet out;
        out.intervals.push_back({center - half, center + half, true, true});
        return out;
    }

    const std::vector<double>& residuals() const { return residuals_; }

private:
    Dataset proper_;
    std::vector<double> residuals_;
    int k_;
    DistanceKind metric_;
};

inline IntervalSet icp_regress(const Dataset& data, std::size_t t, int k, double epsilon,
                               std::span<const double> object,
                               DistanceKind metric = DistanceKind::euclidean) {
    return IcpRegression(data, t, k, metric).predict(object, epsilon);
}

}  // namespace conformal
