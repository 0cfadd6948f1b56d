#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <memory>
#include <string>
#include <vector>

#include "conformal/datagen.hpp"
#include "conformal/icp.hpp"
#include "conformal/measures.hpp"
#include "conformal/regression.hpp"
#include "conformal/scorer.hpp"
#include "conformal/stats.hpp"

namespace conformal {

/// Log-spaced integer grid (numpy-style: truncation toward zero).
inline std::vector<std::size_t> log_spaced_grid(double lo, double hi, std::size_t count) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < count; ++i) {
        double e = std::log10(lo) +
                   (count == 1 ? 0.0
                               : (std::log10(hi) - std::log10(lo)) * static_cast<double>(i) /
                                     static_cast<double>(count - 1));
        out.push_back(static_cast<std::size_t>(std::pow(10.0, e)));
    }
    return out;
}

/// Default benchmark grid: 13 log-spaced training sizes in [10, 1e5].
inline std::vector<std::size_t> default_n_grid() { return log_spaced_grid(10, 1e5, 13); }

/// One benchmark cell request. `measure` is a measure name or "knn-regress";
/// `variant` is standard | optimized | icp.
struct BenchTask {
    std::string measure = "knn";
    std::string variant = "optimized";
};

struct BenchRecord {
    std::string measure;
    std::string variant;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    double train_seconds = 0.0;
    double mean_predict_seconds = 0.0;
    std::size_t predictions_completed = 0;
    std::size_t predictions_requested = 0;
    bool timed_out = false;
    std::string error;  // empty when the cell ran clean
};

struct RunConfig {
    std::vector<std::size_t> n_grid = default_n_grid();
    std::size_t test_points = 100;
    double timeout_seconds = 60.0;  // per cell, checked between predictions
    std::size_t repeats = 5;        // seeds base_seed .. base_seed + repeats - 1
    std::uint64_t base_seed = 0;
    ScorerConfig scorer;
    std::size_t dim = 30;
    std::size_t classes = 2;
    double class_sep = 2.0;
    double noise_sd = 0.1;
    double epsilon = 0.1;  // level used for regression prediction sets
    double icp_train_fraction = 0.5;

    void validate() const {
        if (n_grid.empty()) throw std::invalid_argument("empty n grid");
        for (std::size_t i = 0; i + 1 < n_grid.size(); ++i)
            if (n_grid[i] >= n_grid[i + 1])
                throw std::invalid_argument("n grid must be strictly increasing");
        if (n_grid.front() == 0) throw std::invalid_argument("n grid values must be positive");
    }
};

namespace detail {

using bench_clock = std::chrono::steady_clock;

inline double seconds_since(bench_clock::time_point start) {
    return std::chrono::duration<double>(bench_clock::now() - start).count();
}

inline GenSpec cell_gen_spec(const RunConfig& config, Task task, std::size_t n,
                             std::uint64_t seed) {
    GenSpec spec;
    spec.task = task;
    spec.n = n;
    spec.dim = config.dim;
    spec.classes = config.classes;
    spec.class_sep = config.class_sep;
    spec.noise_sd = config.noise_sd;
    spec.seed = seed;
    return spec;
}

}  // namespace detail

/// Runs one (measure, variant, n, seed) cell: seeded data, timed training,
/// then per-point timed predictions until done or timed out. Single-threaded
/// by design so the timings mean something.
inline BenchRecord run_bench_cell(const BenchTask& task, std::size_t n, std::uint64_t seed,
                                  const RunConfig& config) {
    BenchRecord rec;
    rec.measure = task.measure;
    rec.variant = task.variant;
    rec.n = n;
    rec.seed = seed;
    rec.predictions_requested = config.test_points;
    bool regression = task.measure == "knn-regress";

    try {
        Task data_task = regression ? Task::regression : Task::classification;
        auto [train, test] = gen_train_test(detail::cell_gen_spec(config, data_task, n, seed), n,
                                            config.test_points);

        ScorerConfig scorer_config = config.scorer;
        scorer_config.seed = seed;
        std::size_t icp_split = std::max<std::size_t>(
            1, static_cast<std::size_t>(config.icp_train_fraction * static_cast<double>(n)));

        auto start = detail::bench_clock::now();
        std::unique_ptr<NonconformityScorer> scorer;
        std::unique_ptr<IcpCalibration> icp;
        std::unique_ptr<KnnRegressionState> reg_state;
        std::unique_ptr<IcpRegression> reg_icp;

        if (regression) {
            int k = scorer_config.k;
            if (task.variant == "optimized")
                reg_state = std::make_unique<KnnRegressionState>(train, k, scorer_config.distance);
            else if (task.variant == "icp")
                reg_icp = std::make_unique<IcpRegression>(train, icp_split, k,
                                                          scorer_config.distance);
        } else {
            if (task.variant == "icp") {
                scorer_config.measure = measure_from_string(task.measure);
                icp = std::make_unique<IcpCalibration>(
                    IcpCalibration::calibrate(train, icp_split, scorer_config));
            } else {
                scorer_config.measure = measure_from_string(task.measure);
                Variant variant =
                    task.variant == "optimized" ? Variant::optimized : Variant::standard;
                scorer = make_scorer(train, scorer_config, variant);
            }
        }
        rec.train_seconds = detail::seconds_since(start);

        auto cell_start = detail::bench_clock::now();
        double predict_total = 0.0;
        for (std::size_t i = 0; i < test.size(); ++i) {
            if (detail::seconds_since(cell_start) > config.timeout_seconds) {
                rec.timed_out = true;
                break;
            }
            auto p0 = detail::bench_clock::now();
            if (regression) {
                int k = scorer_config.k;
                if (task.variant == "optimized") {
                    auto coeffs = reg_state->coefficients(test.object(i));
                    (void)reg_prediction_set(coeffs, config.epsilon);
                } else if (task.variant == "icp") {
                    (void)reg_icp->predict(test.object(i), config.epsilon);
                } else {
                    auto coeffs =
                        reg_coefficients_baseline(train, test.object(i), k, scorer_config.distance);
                    (void)reg_prediction_set(coeffs, config.epsilon);
                }
            } else if (icp) {
                (void)icp->classify(test.object(i));
            } else {
                (void)classify(*scorer, test.object(i));
            }
            predict_total += detail::seconds_since(p0);
            ++rec.predictions_completed;
        }
        if (rec.predictions_completed > 0)
            rec.mean_predict_seconds =
                predict_total / static_cast<double>(rec.predictions_completed);
    } catch (const std::exception& e) {
        rec.error = e.what();
    }
    return rec;
}

inline std::vector<BenchRecord> run_bench(const std::vector<BenchTask>& tasks,
                                          const RunConfig& config) {
    config.validate();
    std::vector<BenchRecord> records;
    for (const BenchTask& task : tasks)
        for (std::size_t n : config.n_grid)
            for (std::size_t r = 0; r < config.repeats; ++r)
                records.push_back(run_bench_cell(task, n, config.base_seed + r, config));
    return records;
}

/// Least-squares slope of log(y) on log(x); the scaling criteria compare it
/// against the analytic complexity exponents.
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = x.size();
    for (std::size_t i = 0; i < m; ++i) {
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double d = static_cast<double>(m);
    return (d * sxy - sx * sy) / (d * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Coverage validation

struct CoverageRow {
    std::string measure;
    std::string variant;
    double epsilon = 0.0;
    std::size_t n = 0;
    std::size_t tests = 0;
    std::size_t errors = 0;
    double error_rate = 0.0;
    double bound = 0.0;  // epsilon + 2 sigma binomial band
    bool pass = false;
};

/// Counts miscoverage (true label outside the prediction set) for each
/// epsilon, classifying each test point once.
inline std::vector<std::size_t> coverage_errors(const NonconformityScorer& scorer,
                                                const Dataset& test,
                                                std::span<const double> epsilons) {
    std::vector<std::size_t> errors(epsilons.size(), 0);
    for (std::size_t i = 0; i < test.size(); ++i) {
        PValueVector pv = classify(scorer, test.object(i));
        double p_true = pv[test.label(i)];
        for (std::size_t e = 0; e < epsilons.size(); ++e)
            if (!(p_true > epsilons[e])) ++errors[e];
    }
    return errors;
}

inline std::vector<std::size_t> coverage_errors_icp(const IcpCalibration& calib,
                                                    const Dataset& test,
                                                    std::span<const double> epsilons) {
    std::vector<std::size_t> errors(epsilons.size(), 0);
    for (std::size_t i = 0; i < test.size(); ++i) {
        PValueVector pv = calib.classify(test.object(i));
        double p_true = pv[test.label(i)];
        for (std::size_t e = 0; e < epsilons.size(); ++e)
            if (!(p_true > epsilons[e])) ++errors[e];
    }
    return errors;
}

inline double coverage_bound(double epsilon, std::size_t tests) {
    return epsilon + 2.0 * std::sqrt(epsilon * (1.0 - epsilon) / static_cast<double>(tests));
}

inline std::vector<CoverageRow> coverage_rows(const std::string& measure,
                                              const std::string& variant, std::size_t n,
                                              std::span<const double> epsilons,
                                              const std::vector<std::size_t>& errors,
                                              std::size_t tests) {
    std::vector<CoverageRow> rows;
    for (std::size_t e = 0; e < epsilons.size(); ++e) {
        CoverageRow row;
        row.measure = measure;
        row.variant = variant;
        row.epsilon = epsilons[e];
        row.n = n;
        row.tests = tests;
        row.errors = errors[e];
        row.error_rate = static_cast<double>(errors[e]) / static_cast<double>(tests);
        row.bound = coverage_bound(epsilons[e], tests);
        row.pass = row.error_rate <= row.bound;
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Fuzziness comparison (full CP vs ICP)

struct FuzzinessReport {
    std::string measure;
    std::size_t tests = 0;
    double cp_mean = 0.0, cp_sd = 0.0;
    double icp_mean = 0.0, icp_sd = 0.0;
    WelchResult welch;  // H1: CP fuzziness < ICP fuzziness
};

/// Per-test-point fuzziness for full CP (optimized scorer) and ICP with the
/// same measure, plus the one-sided Welch test of "CP is sharper".
inline FuzzinessReport run_fuzziness(const Dataset& train, const Dataset& test,
                                     const ScorerConfig& config, std::size_t icp_split,
                                     double significance = 0.01) {
    FuzzinessReport report;
    report.measure = to_string(config.measure);
    report.tests = test.size();

    auto scorer = make_scorer(train, config, Variant::optimized);
    IcpCalibration calib = IcpCalibration::calibrate(train, icp_split, config);

    std::vector<double> cp_values(test.size()), icp_values(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        cp_values[i] = fuzziness(classify(*scorer, test.object(i)));
        icp_values[i] = fuzziness(calib.classify(test.object(i)));
    }
    report.welch = welch_one_sided_less(cp_values, icp_values, significance);
    report.cp_mean = report.welch.mean_a;
    report.cp_sd = report.welch.sd_a;
    report.icp_mean = report.welch.mean_b;
    report.icp_sd = report.welch.sd_b;
    return report;
}

}  // namespace conformal
