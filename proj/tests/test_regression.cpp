#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "conformal/bench.hpp"
#include "conformal/regression.hpp"

#include "test_helpers.hpp"

using namespace conformal;

namespace {

// Dense-grid reference: membership of every grid point via direct p-value
// evaluation. The sweep must agree up to one grid step around endpoints.
void check_against_grid(const RegressionCoefficients& coeffs, const IntervalSet& sweep,
                        double epsilon, double lo, double hi, double step) {
    std::size_t steps = static_cast<std::size_t>((hi - lo) / step);
    for (std::size_t s = 0; s <= steps; ++s) {
        double y = lo + static_cast<double>(s) * step;
        bool direct = reg_pvalue_at(coeffs, y) > epsilon;
        bool swept = sweep.contains(y);
        if (direct == swept) continue;
        bool near_boundary = false;
        for (const Interval& iv : sweep.intervals) {
            if (std::isfinite(iv.lo) && std::abs(y - iv.lo) <= step) near_boundary = true;
            if (std::isfinite(iv.hi) && std::abs(y - iv.hi) <= step) near_boundary = true;
        }
        INFO("y = " << y);
        REQUIRE(near_boundary);
    }
}

}  // namespace

TEST_CASE("two-point worked example: coefficients, p-values, prediction set") {
    auto data = test_helpers::regression_1d({{0, 0}, {10, 10}});
    double x[1] = {5.0};

    RegressionCoefficients coeffs = reg_coefficients_baseline(data, x, 1);
    // Both points see the test object displace their single neighbor.
    CHECK(coeffs.offsets[0] == 0.0);
    CHECK(coeffs.slopes[0] == -1.0);
    CHECK(coeffs.offsets[1] == 10.0);
    CHECK(coeffs.slopes[1] == -1.0);
    // Equidistant neighbors tie to the lower index, so the prediction is y_1.
    CHECK(coeffs.test_offset == 0.0);

    CHECK(reg_pvalue_at(coeffs, 0.0) == Catch::Approx(1.0));
    CHECK(reg_pvalue_at(coeffs, 6.0) == Catch::Approx(2.0 / 3.0));

    IntervalSet set = reg_prediction_set(coeffs, 0.9);
    REQUIRE(set.intervals.size() == 1);
    CHECK(std::isinf(set.intervals[0].lo));
    CHECK(set.intervals[0].hi == Catch::Approx(5.0));
    CHECK(set.intervals[0].hi_closed);

    check_against_grid(coeffs, set, 0.9, -50.0, 50.0, 1e-3);
}

TEST_CASE("epsilon below 1/(n+1) yields the full line") {
    auto data = test_helpers::regression_1d({{0, 0}, {10, 10}});
    double x[1] = {5.0};
    RegressionCoefficients coeffs = reg_coefficients_baseline(data, x, 1);
    IntervalSet set = reg_prediction_set(coeffs, 0.2);  // min p = 1/3
    REQUIRE(set.intervals.size() == 1);
    CHECK(std::isinf(set.intervals[0].lo));
    CHECK(std::isinf(set.intervals[0].hi));
}

TEST_CASE("a distant test point displaces nobody") {
    auto data = test_helpers::random_regression(30, 1, 71);
    std::vector<double> far{1e9};
    RegressionCoefficients coeffs = reg_coefficients_baseline(data, far, 3);
    for (double b : coeffs.slopes) CHECK(b == 0.0);
}

TEST_CASE("optimized coefficients equal the baseline exactly") {
    for (std::uint64_t seed : {401, 402, 403}) {
        for (std::size_t dim : {1, 5}) {
            auto data = test_helpers::random_regression(200, dim, seed);
            KnnRegressionState state(data, 5);
            auto probe = test_helpers::random_regression(8, dim, seed + 10);
            for (std::size_t i = 0; i < probe.size(); ++i) {
                auto a = reg_coefficients_baseline(data, probe.object(i), 5);
                auto b = state.coefficients(probe.object(i));
                CHECK(a.test_offset == b.test_offset);
                for (std::size_t j = 0; j < a.size(); ++j) {
                    CHECK(a.offsets[j] == b.offsets[j]);
                    CHECK(a.slopes[j] == b.slopes[j]);
                }
            }
        }
    }
}

TEST_CASE("boundary convention: exact tie with the k-th neighbor does not displace") {
    // x_1 at 0 with neighbors at 2 (its k-th distance is 2); test at distance
    // exactly 2 must leave b_1 = 0.
    auto data = test_helpers::regression_1d({{0, 1}, {2, 2}, {-5, 3}});
    double x[1] = {-2.0};  // |x - 0| = 2 == distance(0, 2)
    RegressionCoefficients coeffs = reg_coefficients_baseline(data, x, 1);
    CHECK(coeffs.slopes[0] == 0.0);

    KnnRegressionState state(data, 1);
    auto opt = state.coefficients(x);
    CHECK(opt.slopes[0] == 0.0);
    CHECK(opt.offsets[0] == coeffs.offsets[0]);
}

TEST_CASE("k = n-1 displaces whenever the test point beats the farthest neighbor") {
    auto data = test_helpers::random_regression(20, 2, 83);
    int k = static_cast<int>(data.size()) - 1;
    KnnRegressionState state(data, k);
    auto probe = test_helpers::random_regression(5, 2, 84);
    for (std::size_t t = 0; t < probe.size(); ++t) {
        auto coeffs = state.coefficients(probe.object(t));
        for (std::size_t i = 0; i < data.size(); ++i) {
            // brute force: farthest other training point
            double far = 0.0;
            for (std::size_t j = 0; j < data.size(); ++j)
                if (j != i)
                    far = std::max(far, euclidean_distance(data.object(i), data.object(j)));
            double d = euclidean_distance(data.object(i), probe.object(t));
            CHECK((coeffs.slopes[i] != 0.0) == (d < far));
        }
    }
}

TEST_CASE("sweep agrees with the dense grid on random instances") {
    for (std::uint64_t seed : {421, 422}) {
        for (int k : {1, 5}) {
            auto data = test_helpers::random_regression(60, 1, seed, 0.5);
            KnnRegressionState state(data, k);
            auto probe = test_helpers::random_regression(3, 1, seed + 7);
            double ymin = data.target(0), ymax = data.target(0);
            for (std::size_t i = 0; i < data.size(); ++i) {
                ymin = std::min(ymin, data.target(i));
                ymax = std::max(ymax, data.target(i));
            }
            double range = ymax - ymin;
            for (std::size_t i = 0; i < probe.size(); ++i) {
                auto coeffs = state.coefficients(probe.object(i));
                for (double eps : {0.1, 0.3}) {
                    IntervalSet set = reg_prediction_set(coeffs, eps);
                    check_against_grid(coeffs, set, eps, ymin - range, ymax + range, 1e-3);
                }
            }
        }
    }
}

TEST_CASE("prediction intervals are nested in epsilon") {
    auto data = test_helpers::random_regression(50, 2, 91, 0.4);
    KnnRegressionState state(data, 3);
    auto probe = test_helpers::random_regression(5, 2, 92);
    for (std::size_t i = 0; i < probe.size(); ++i) {
        auto coeffs = state.coefficients(probe.object(i));
        IntervalSet wide = reg_prediction_set(coeffs, 0.05);
        IntervalSet narrow = reg_prediction_set(coeffs, 0.3);
        for (const Interval& iv : narrow.intervals) {
            if (std::isfinite(iv.lo)) CHECK(wide.contains(iv.lo));
            if (std::isfinite(iv.hi)) CHECK(wide.contains(iv.hi));
            CHECK(wide.contains((std::isfinite(iv.lo) && std::isfinite(iv.hi))
                                    ? (iv.lo + iv.hi) / 2
                                    : (std::isfinite(iv.lo) ? iv.lo : iv.hi)));
        }
    }
}

TEST_CASE("too-small training sets are rejected") {
    auto data = test_helpers::regression_1d({{0, 0}, {1, 1}});
    double x[1] = {0.5};
    CHECK_THROWS_AS(reg_coefficients_baseline(data, x, 2), std::invalid_argument);
}

TEST_CASE("icp regression covers the conservative edge cases") {
    auto data = test_helpers::regression_1d(
        {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}, {5, 5}, {6, 6}, {7, 7}});
    double x[1] = {3.5};

    // Constant labels: zero residuals, the interval degenerates to a point.
    auto flat = test_helpers::regression_1d({{0, 2}, {1, 2}, {2, 2}, {3, 2}, {4, 2}, {5, 2}});
    IntervalSet point = icp_regress(flat, 3, 1, 0.2, x);
    REQUIRE(point.intervals.size() == 1);
    CHECK(point.intervals[0].lo == point.intervals[0].hi);

    // Epsilon 0 clamps to the largest residual.
    IcpRegression calib(data, 4, 2);
    IntervalSet widest = calib.predict(x, 0.0);
    double half = (widest.intervals[0].hi - widest.intervals[0].lo) / 2;
    CHECK(half == Catch::Approx(calib.residuals().back()));

    CHECK_THROWS_AS(icp_regress(data, 8, 1, 0.1, x), std::invalid_argument);
}

TEST_CASE("icp regression coverage on exchangeable data") {
    GenSpec spec;
    spec.task = Task::regression;
    spec.dim = 3;
    spec.noise_sd = 0.5;
    spec.seed = 95;
    auto [train, test] = gen_train_test(spec, 300, 500);
    IcpRegression calib(train, 150, 5);
    for (double eps : {0.1, 0.2}) {
        std::size_t errors = 0;
        for (std::size_t i = 0; i < test.size(); ++i)
            if (!calib.predict(test.object(i), eps).contains(test.target(i))) ++errors;
        double rate = static_cast<double>(errors) / static_cast<double>(test.size());
        CHECK(rate <= coverage_bound(eps, test.size()));
    }
}
