// Command-line harness: dataset generation, CP/ICP prediction, timing
// sweeps, coverage validation, and the CP-vs-ICP fuzziness comparison.
//
// Subcommands: gen | predict | bench | validate | fuzziness.
// All commands are deterministic given their flags and seeds (wall-clock
// fields aside). Relative output paths are resolved against
// $CONFORMAL_REPORT_DIR when it is set.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <vector>

#include "conformal/conformal.hpp"

using json = nlohmann::ordered_json;
using namespace conformal;

namespace {

std::string resolve_output(const std::string& path) {
    if (path.empty() || path == "-") return path;
    const char* dir = std::getenv("CONFORMAL_REPORT_DIR");
    std::filesystem::path p(path);
    if (dir && *dir && p.is_relative()) return (std::filesystem::path(dir) / p).string();
    return path;
}

void write_report(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text << '\n';
        return;
    }
    std::string resolved = resolve_output(path);
    std::ofstream out(resolved);
    if (!out) throw std::runtime_error("cannot open for writing: " + resolved);
    out << text << '\n';
}

json interval_to_json(const Interval& iv) {
    json pair = json::array();
    if (std::isfinite(iv.lo))
        pair.push_back(iv.lo);
    else
        pair.push_back("-inf");
    if (std::isfinite(iv.hi))
        pair.push_back(iv.hi);
    else
        pair.push_back("inf");
    return pair;
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(csv);
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

struct CommonScorerFlags {
    int k = 15;
    double bandwidth = 1.0;
    double ridge = 1.0;
    int trees = 10;
    int tree_depth = 10;
    int tree_features = 0;
    std::string feature_map = "identity";
    std::uint64_t seed = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--k", k, "neighbor count for the k-NN family");
        cmd->add_option("--bandwidth", bandwidth, "KDE bandwidth h");
        cmd->add_option("--ridge", ridge, "LS-SVM regularizer");
        cmd->add_option("--trees", trees, "bootstrap ensemble size B");
        cmd->add_option("--tree-depth", tree_depth, "base tree depth limit");
        cmd->add_option("--tree-features", tree_features,
                        "features per split (0 = sqrt(p))");
        cmd->add_option("--feature-map", feature_map, "lssvm feature map: identity|quadratic");
        cmd->add_option("--seed", seed, "RNG seed");
    }

    ScorerConfig to_config(const std::string& measure) const {
        ScorerConfig config;
        if (measure != "knn-regress") config.measure = measure_from_string(measure);
        config.k = k;
        config.bandwidth = bandwidth;
        config.ridge = ridge;
        config.ensemble_size = trees;
        config.tree_max_depth = tree_depth;
        config.tree_features_per_split = tree_features;
        config.feature_map =
            feature_map == "quadratic" ? FeatureMapKind::quadratic : FeatureMapKind::identity;
        config.seed = seed;
        config.validate();
        return config;
    }
};

// ---------------------------------------------------------------------------

void setup_gen(CLI::App& app) {
    auto cmd = app.add_subcommand("gen", "generate a seeded synthetic dataset CSV");
    auto spec = std::make_shared<GenSpec>();
    auto task = std::make_shared<std::string>("classification");
    auto out = std::make_shared<std::string>();
    cmd->add_option("--task", *task, "classification|regression")
        ->check(CLI::IsMember({"classification", "regression"}));
    cmd->add_option("--n", spec->n, "example count")->required();
    cmd->add_option("--dim", spec->dim, "feature dimension (default 30)");
    cmd->add_option("--classes", spec->classes, "class count (classification)");
    cmd->add_option("--class-sep", spec->class_sep, "center spacing");
    cmd->add_option("--noise-sd", spec->noise_sd, "label noise sd (regression)");
    cmd->add_option("--seed", spec->seed, "RNG seed");
    cmd->add_option("--out", *out, "output CSV path")->required();
    cmd->callback([spec, task, out] {
        spec->task = *task == "regression" ? Task::regression : Task::classification;
        save_csv(generate(*spec), resolve_output(*out));
    });
}

// ---------------------------------------------------------------------------

void setup_predict(CLI::App& app) {
    auto cmd = app.add_subcommand(
        "predict", "p-values and prediction sets (or intervals) for a test CSV");
    struct Opts {
        std::string train, test, out;
        std::string measure = "knn", variant = "optimized";
        double epsilon = 0.1;
        std::size_t icp_split = 0;  // 0 = n/2
        unsigned threads = 1;
        CommonScorerFlags scorer;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--train", o->train, "training CSV")->required();
    cmd->add_option("--test", o->test, "test CSV")->required();
    cmd->add_option("--measure", o->measure,
                    "nn|knn|simplified-knn|kde|lssvm|bootstrap|knn-regress");
    cmd->add_option("--variant", o->variant, "standard|optimized|icp")
        ->check(CLI::IsMember({"standard", "optimized", "icp"}));
    cmd->add_option("--epsilon", o->epsilon, "significance level");
    cmd->add_option("--icp-split", o->icp_split, "proper training size t (default n/2)");
    cmd->add_option("--threads", o->threads, "parallel prediction threads");
    cmd->add_option("--out", o->out, "JSON report path (default stdout)");
    o->scorer.attach(cmd);

    cmd->callback([o] {
        bool regression = o->measure == "knn-regress";
        Task task = regression ? Task::regression : Task::classification;
        Dataset train = load_csv(o->train, task);
        Dataset test = load_csv(o->test, task);
        if (!regression) test = align_labels(test, train);
        else if (test.dim() != train.dim())
            throw std::runtime_error("train/test dimension mismatch");
        ScorerConfig config = o->scorer.to_config(o->measure);
        std::size_t split = o->icp_split ? o->icp_split : train.size() / 2;

        json report;
        report["task"] = regression ? "regression" : "classification";
        report["measure"] = o->measure;
        report["variant"] = o->variant;
        report["epsilon"] = o->epsilon;
        report["train_size"] = train.size();
        json rows = json::array();

        if (regression) {
            std::unique_ptr<KnnRegressionState> state;
            std::unique_ptr<IcpRegression> icp;
            if (o->variant == "optimized")
                state = std::make_unique<KnnRegressionState>(train, config.k, config.distance);
            else if (o->variant == "icp")
                icp = std::make_unique<IcpRegression>(train, split, config.k, config.distance);
            std::vector<json> slots(test.size());
            parallel_for(test.size(), o->threads, [&](std::size_t i) {
                IntervalSet set;
                if (icp) {
                    set = icp->predict(test.object(i), o->epsilon);
                } else {
                    RegressionCoefficients coeffs =
                        state ? state->coefficients(test.object(i))
                              : reg_coefficients_baseline(train, test.object(i), config.k,
                                                          config.distance);
                    set = reg_prediction_set(coeffs, o->epsilon);
                }
                json intervals = json::array();
                for (const Interval& iv : set.intervals) intervals.push_back(interval_to_json(iv));
                slots[i]["intervals"] = intervals;
            });
            for (auto& s : slots) rows.push_back(std::move(s));
        } else {
            report["labels"] = train.label_names();
            std::unique_ptr<NonconformityScorer> scorer;
            std::unique_ptr<IcpCalibration> icp;
            if (o->variant == "icp")
                icp = std::make_unique<IcpCalibration>(
                    IcpCalibration::calibrate(train, split, config));
            else
                scorer = make_scorer(train, config,
                                     o->variant == "optimized" ? Variant::optimized
                                                               : Variant::standard);
            // One work item per (test point, candidate label) pair.
            std::size_t labels = train.label_count();
            std::vector<PValueVector> pvalues(test.size(), PValueVector(labels));
            parallel_for(test.size() * labels, o->threads, [&](std::size_t job) {
                std::size_t i = job / labels;
                int label = static_cast<int>(job % labels);
                double p;
                if (icp)
                    p = icp->pvalue(test.object(i), label);
                else
                    p = compute_pvalue(scorer->score_vector(test.object(i), label));
                pvalues[i][label] = p;
            });
            for (std::size_t i = 0; i < test.size(); ++i) {
                json pvj = json::object();
                for (std::size_t y = 0; y < labels; ++y)
                    pvj[train.label_name(static_cast<int>(y))] = pvalues[i][static_cast<int>(y)];
                json setj = json::array();
                for (int y : prediction_set(pvalues[i], o->epsilon).labels)
                    setj.push_back(train.label_name(y));
                json row;
                row["p_values"] = pvj;
                row["prediction_set"] = setj;
                rows.push_back(std::move(row));
            }
        }
        report["predictions"] = rows;
        write_report(o->out, report.dump(2));
    });
}

// ---------------------------------------------------------------------------

void setup_bench(CLI::App& app) {
    auto cmd = app.add_subcommand("bench", "timing sweep over training sizes, CSV output");
    struct Opts {
        std::string measures = "knn";
        std::string variants = "standard,optimized,icp";
        std::string grid;  // explicit comma list overrides the log grid
        double n_min = 10, n_max = 1e5;
        std::size_t n_count = 13;
        std::size_t tests = 100;
        double timeout = 60.0;
        std::size_t repeats = 5;
        std::size_t dim = 30, classes = 2;
        double class_sep = 2.0, noise_sd = 0.1, epsilon = 0.1;
        std::string out = "bench.csv";
        CommonScorerFlags scorer;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--measures", o->measures,
                    "comma list: nn,knn,simplified-knn,kde,lssvm,bootstrap,knn-regress");
    cmd->add_option("--variants", o->variants, "comma list: standard,optimized,icp");
    cmd->add_option("--n-grid", o->grid, "explicit comma list of training sizes");
    cmd->add_option("--n-min", o->n_min, "log grid lower end");
    cmd->add_option("--n-max", o->n_max, "log grid upper end");
    cmd->add_option("--n-count", o->n_count, "log grid size");
    cmd->add_option("--tests", o->tests, "test points per cell");
    cmd->add_option("--timeout", o->timeout, "per-cell timeout seconds");
    cmd->add_option("--repeats", o->repeats, "seeds per cell");
    cmd->add_option("--dim", o->dim, "feature dimension");
    cmd->add_option("--classes", o->classes, "class count");
    cmd->add_option("--class-sep", o->class_sep, "center spacing");
    cmd->add_option("--noise-sd", o->noise_sd, "regression noise");
    cmd->add_option("--epsilon", o->epsilon, "regression interval level");
    cmd->add_option("--out", o->out, "output CSV path");
    o->scorer.attach(cmd);

    cmd->callback([o] {
        RunConfig config;
        if (!o->grid.empty()) {
            config.n_grid.clear();
            for (const std::string& item : split_list(o->grid))
                config.n_grid.push_back(std::stoul(item));
        } else {
            config.n_grid = log_spaced_grid(o->n_min, o->n_max, o->n_count);
        }
        config.test_points = o->tests;
        config.timeout_seconds = o->timeout;
        config.repeats = o->repeats;
        config.base_seed = o->scorer.seed;
        config.scorer = o->scorer.to_config("knn");
        config.dim = o->dim;
        config.classes = o->classes;
        config.class_sep = o->class_sep;
        config.noise_sd = o->noise_sd;
        config.epsilon = o->epsilon;

        std::vector<BenchTask> tasks;
        for (const std::string& m : split_list(o->measures))
            for (const std::string& v : split_list(o->variants))
                tasks.push_back({m, v});

        std::string resolved = resolve_output(o->out);
        std::ofstream out(resolved);
        if (!out) throw std::runtime_error("cannot open for writing: " + resolved);
        out << "measure,variant,n,seed,train_seconds,mean_predict_seconds,"
               "predictions_completed,predictions_requested,timed_out,error\n";
        config.validate();
        for (const BenchTask& task : tasks) {
            for (std::size_t n : config.n_grid) {
                for (std::size_t r = 0; r < config.repeats; ++r) {
                    BenchRecord rec = run_bench_cell(task, n, config.base_seed + r, config);
                    out << rec.measure << ',' << rec.variant << ',' << rec.n << ',' << rec.seed
                        << ',' << rec.train_seconds << ',' << rec.mean_predict_seconds << ','
                        << rec.predictions_completed << ',' << rec.predictions_requested << ','
                        << (rec.timed_out ? 1 : 0) << ',' << '"' << rec.error << '"' << '\n';
                    out.flush();
                    std::cerr << rec.measure << '/' << rec.variant << " n=" << rec.n
                              << " seed=" << rec.seed << " train=" << rec.train_seconds
                              << "s predict=" << rec.mean_predict_seconds << "s"
                              << (rec.timed_out ? " (timeout)" : "")
                              << (rec.error.empty() ? "" : (" error: " + rec.error)) << '\n';
                }
            }
        }
    });
}

// ---------------------------------------------------------------------------

void setup_validate(CLI::App& app) {
    auto cmd = app.add_subcommand("validate", "Monte-Carlo coverage check");
    struct Opts {
        std::string measures = "knn";
        std::string variant = "optimized";
        std::string epsilons = "0.05,0.1,0.2";
        std::size_t n = 500, tests = 2000;
        std::size_t dim = 30, classes = 2;
        double class_sep = 2.0;
        std::string out;
        CommonScorerFlags scorer;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--measures", o->measures, "comma list of measures");
    cmd->add_option("--variant", o->variant, "standard|optimized|icp");
    cmd->add_option("--epsilons", o->epsilons, "comma list of significance levels");
    cmd->add_option("--n", o->n, "training size");
    cmd->add_option("--tests", o->tests, "test points");
    cmd->add_option("--dim", o->dim, "feature dimension");
    cmd->add_option("--classes", o->classes, "class count");
    cmd->add_option("--class-sep", o->class_sep, "center spacing");
    cmd->add_option("--out", o->out, "JSON report path (default stdout)");
    o->scorer.attach(cmd);

    cmd->callback([o] {
        std::vector<double> epsilons;
        for (const std::string& e : split_list(o->epsilons)) epsilons.push_back(std::stod(e));

        GenSpec gen;
        gen.dim = o->dim;
        gen.classes = o->classes;
        gen.class_sep = o->class_sep;
        gen.seed = o->scorer.seed;
        auto [train, test] = gen_train_test(gen, o->n, o->tests);

        json report;
        json rows = json::array();
        bool all_pass = true;
        for (const std::string& m : split_list(o->measures)) {
            ScorerConfig config = o->scorer.to_config(m);
            std::vector<std::size_t> errors;
            if (o->variant == "icp") {
                IcpCalibration calib =
                    IcpCalibration::calibrate(train, train.size() / 2, config);
                errors = coverage_errors_icp(calib, test, epsilons);
            } else {
                auto scorer = make_scorer(train, config,
                                          o->variant == "optimized" ? Variant::optimized
                                                                    : Variant::standard);
                errors = coverage_errors(*scorer, test, epsilons);
            }
            for (const CoverageRow& row :
                 coverage_rows(m, o->variant, o->n, epsilons, errors, test.size())) {
                json r;
                r["measure"] = row.measure;
                r["variant"] = row.variant;
                r["epsilon"] = row.epsilon;
                r["n"] = row.n;
                r["tests"] = row.tests;
                r["errors"] = row.errors;
                r["error_rate"] = row.error_rate;
                r["bound"] = row.bound;
                r["pass"] = row.pass;
                all_pass = all_pass && row.pass;
                rows.push_back(r);
            }
        }
        report["rows"] = rows;
        report["all_pass"] = all_pass;
        write_report(o->out, report.dump(2));
        if (!all_pass) throw std::runtime_error("coverage exceeded its binomial band");
    });
}

// ---------------------------------------------------------------------------

void setup_fuzziness(CLI::App& app) {
    auto cmd =
        app.add_subcommand("fuzziness", "CP vs ICP sharpness report with a Welch one-sided test");
    struct Opts {
        std::string measures = "knn,kde";
        std::size_t n = 400, tests = 400;
        std::size_t dim = 30, classes = 4;
        double class_sep = 2.0;
        double significance = 0.01;
        double icp_fraction = 0.5;
        std::string out;
        CommonScorerFlags scorer;
    };
    auto o = std::make_shared<Opts>();
    cmd->add_option("--measures", o->measures, "comma list of measures");
    cmd->add_option("--n", o->n, "training size");
    cmd->add_option("--tests", o->tests, "test points");
    cmd->add_option("--dim", o->dim, "feature dimension");
    cmd->add_option("--classes", o->classes, "class count");
    cmd->add_option("--class-sep", o->class_sep, "center spacing");
    cmd->add_option("--significance", o->significance, "Welch rejection level");
    cmd->add_option("--icp-fraction", o->icp_fraction, "proper training fraction t/n");
    cmd->add_option("--out", o->out, "JSON report path (default stdout)");
    o->scorer.attach(cmd);

    cmd->callback([o] {
        GenSpec gen;
        gen.dim = o->dim;
        gen.classes = o->classes;
        gen.class_sep = o->class_sep;
        gen.seed = o->scorer.seed;
        auto [train, test] = gen_train_test(gen, o->n, o->tests);

        std::size_t split = std::max<std::size_t>(
            1, static_cast<std::size_t>(o->icp_fraction * static_cast<double>(train.size())));
        json reports = json::array();
        for (const std::string& m : split_list(o->measures)) {
            ScorerConfig config = o->scorer.to_config(m);
            FuzzinessReport rep = run_fuzziness(train, test, config, split, o->significance);
            json r;
            r["measure"] = rep.measure;
            r["tests"] = rep.tests;
            r["cp_mean"] = rep.cp_mean;
            r["cp_sd"] = rep.cp_sd;
            r["icp_mean"] = rep.icp_mean;
            r["icp_sd"] = rep.icp_sd;
            r["welch_t"] = rep.welch.t;
            r["welch_df"] = rep.welch.df;
            r["p_one_sided"] = rep.welch.p_one_sided;
            r["reject_icp_not_worse"] = rep.welch.reject;
            r["cp_sharper"] = rep.cp_mean <= rep.icp_mean;
            reports.push_back(r);
        }
        json report;
        report["null_hypothesis"] = "ICP fuzziness is smaller than CP fuzziness";
        report["reports"] = reports;
        write_report(o->out, report.dump(2));
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conformal prediction toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "key=value file overriding flag defaults ([subcommand] sections)");
    setup_gen(app);
    setup_predict(app);
    setup_bench(app);
    setup_validate(app);
    setup_fuzziness(app);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
