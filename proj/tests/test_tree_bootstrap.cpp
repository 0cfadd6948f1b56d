#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>

#include "conformal/measures/bootstrap.hpp"
#include "conformal/measures/tree.hpp"
#include "conformal/scorer.hpp"

#include "test_helpers.hpp"

using namespace conformal;

namespace {

struct TreeFixture {
    std::vector<std::vector<double>> storage;
    std::vector<std::span<const double>> objects;
    std::vector<int> labels;

    void add(std::initializer_list<double> object, int label) {
        storage.emplace_back(object);
        labels.push_back(label);
    }
    void finish() {
        for (const auto& row : storage) objects.emplace_back(row);
    }
};

}  // namespace

TEST_CASE("pure sample yields a one-hot leaf") {
    TreeFixture fx;
    fx.add({0.0, 1.0}, 1);
    fx.add({2.0, -1.0}, 1);
    fx.finish();
    std::mt19937_64 rng(1);
    DecisionTree tree = DecisionTree::train(fx.objects, fx.labels, 3, {10, 0}, rng);
    CHECK(tree.node_count() == 1);
    auto conf = tree.predict(fx.objects[0]);
    CHECK(conf[0] == 0.0);
    CHECK(conf[1] == 1.0);
    CHECK(conf[2] == 0.0);
}

TEST_CASE("xor is separated with full feature access and depth 2") {
    TreeFixture fx;
    fx.add({0.0, 0.0}, 0);
    fx.add({1.0, 1.0}, 0);
    fx.add({0.0, 1.0}, 1);
    fx.add({1.0, 0.0}, 1);
    fx.finish();
    std::mt19937_64 rng(2);
    DecisionTree tree = DecisionTree::train(fx.objects, fx.labels, 2, {2, 2}, rng);
    for (std::size_t i = 0; i < fx.objects.size(); ++i)
        CHECK(tree.predict_label(fx.objects[i]) == fx.labels[i]);
}

TEST_CASE("leaf confidences sum to one") {
    auto data = test_helpers::random_classification(60, 4, 3, 12);
    std::vector<std::span<const double>> objects;
    std::vector<int> labels;
    for (std::size_t i = 0; i < data.size(); ++i) {
        objects.push_back(data.object(i));
        labels.push_back(data.label(i));
    }
    std::mt19937_64 rng(3);
    DecisionTree tree = DecisionTree::train(objects, labels, 3, {4, 0}, rng);
    auto probe = test_helpers::random_classification(20, 4, 3, 13);
    for (std::size_t i = 0; i < probe.size(); ++i) {
        auto conf = tree.predict(probe.object(i));
        double sum = 0;
        for (double c : conf) sum += c;
        CHECK(sum == Catch::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("depth-zero trees predict the sample majority") {
    TreeFixture fx;
    fx.add({0.0}, 1);
    fx.add({1.0}, 1);
    fx.add({2.0}, 0);
    fx.finish();
    std::mt19937_64 rng(4);
    DecisionTree tree = DecisionTree::train(fx.objects, fx.labels, 2, {0, 0}, rng);
    CHECK(tree.node_count() == 1);
    double far[1] = {-100.0};
    CHECK(tree.predict_label(far) == 1);
}

TEST_CASE("bootstrap training satisfies the sample-count invariants") {
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        auto data = test_helpers::random_classification(30 + 10 * seed, 4, 2, seed);
        ScorerConfig config;
        config.measure = MeasureKind::bootstrap;
        config.ensemble_size = 10;
        config.seed = seed;
        BootstrapScorerOptimized scorer(data, config);

        std::size_t n = data.size();
        CHECK(scorer.placeholder_sample_ids().size() == 10);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(scorer.point_sample_ids(i).size() == 10);
            CHECK(scorer.pre_truncation_count(i) >= 10);
        }
        CHECK(scorer.pre_truncation_count(n) >= 10);
        for (int b : scorer.placeholder_sample_ids())
            CHECK_FALSE(scorer.sample_contains_placeholder(b));
    }
}

TEST_CASE("fraction of samples excluding a fixed point is near 1/e") {
    double total_fraction = 0.0;
    int cells = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto data = test_helpers::random_classification(80, 3, 2, 100 + seed);
        ScorerConfig config;
        config.measure = MeasureKind::bootstrap;
        config.ensemble_size = 10;
        config.seed = seed;
        BootstrapScorerOptimized scorer(data, config);
        total_fraction += static_cast<double>(scorer.pre_truncation_count(0)) /
                          static_cast<double>(scorer.draws());
        ++cells;
    }
    double mean = total_fraction / cells;
    CHECK(mean == Catch::Approx(std::exp(-1.0)).margin(0.08));
}

TEST_CASE("about B/e of each example's samples are pretrained") {
    double total = 0.0;
    std::size_t points = 0;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        auto data = test_helpers::random_classification(60, 3, 2, 300 + seed);
        ScorerConfig config;
        config.measure = MeasureKind::bootstrap;
        config.ensemble_size = 10;
        config.seed = seed;
        BootstrapScorerOptimized scorer(data, config);
        for (std::size_t i = 0; i < data.size(); ++i) {
            total += static_cast<double>(scorer.pretrained_count(i));
            ++points;
        }
    }
    double mean = total / static_cast<double>(points);
    double expected = 10.0 * std::exp(-1.0);
    CHECK(mean >= 0.8 * expected);
    CHECK(mean <= 1.2 * expected);
}

TEST_CASE("tiny instance n=1 B=1 trains") {
    auto data = test_helpers::dataset_1d({{0.0, "A"}});
    ScorerConfig config;
    config.measure = MeasureKind::bootstrap;
    config.ensemble_size = 1;
    config.seed = 9;
    BootstrapScorerOptimized scorer(data, config);
    CHECK(scorer.point_sample_ids(0).size() == 1);
    CHECK(scorer.placeholder_sample_ids().size() == 1);
    double x[1] = {0.5};
    ScoreVector s = scorer.score_vector(x, 0);
    CHECK(s.training.size() == 1);
}

TEST_CASE("same seed gives identical bootstrap p-values, different seeds may differ") {
    auto data = test_helpers::random_classification(40, 3, 2, 55);
    auto probe = test_helpers::random_classification(5, 3, 2, 56);
    ScorerConfig config;
    config.measure = MeasureKind::bootstrap;
    config.ensemble_size = 5;
    config.seed = 123;

    BootstrapScorerOptimized a(data, config);
    BootstrapScorerOptimized b(data, config);
    for (std::size_t i = 0; i < probe.size(); ++i) {
        PValueVector pa = classify(a, probe.object(i));
        PValueVector pb = classify(b, probe.object(i));
        for (int y = 0; y < 2; ++y) CHECK(pa[y] == pb[y]);
    }
}

TEST_CASE("standard bootstrap is deterministic per seed too") {
    auto data = test_helpers::random_classification(12, 2, 2, 57);
    ScorerConfig config;
    config.measure = MeasureKind::bootstrap;
    config.ensemble_size = 3;
    config.tree_max_depth = 3;
    config.seed = 5;
    BootstrapScorer a(data, config);
    BootstrapScorer b(data, config);
    double x[2] = {0.1, -0.2};
    ScoreVector sa = a.score_vector(x, 0);
    ScoreVector sb = b.score_vector(x, 0);
    CHECK(sa.test == sb.test);
    for (std::size_t i = 0; i < sa.training.size(); ++i)
        CHECK(sa.training[i] == sb.training[i]);
}

TEST_CASE("bootstrap scorers refuse observe") {
    auto data = test_helpers::random_classification(10, 2, 2, 58);
    ScorerConfig config;
    config.measure = MeasureKind::bootstrap;
    config.ensemble_size = 2;
    BootstrapScorerOptimized scorer(data, config);
    CHECK_FALSE(scorer.incremental());
    Example e;
    e.object = {0.0, 0.0};
    e.label = 0;
    CHECK_THROWS_AS(scorer.observe(e), NotIncrementalError);
}

TEST_CASE("hand-simulated tiny ensemble: depth-zero majority voting") {
    // Three examples, B = 1, single-leaf trees: every classifier predicts
    // its sample's majority label, so scores are 0/-1 indicators.
    auto data = test_helpers::dataset_1d({{0.0, "A"}, {1.0, "A"}, {5.0, "B"}});
    ScorerConfig config;
    config.measure = MeasureKind::bootstrap;
    config.ensemble_size = 1;
    config.tree_max_depth = 0;
    config.seed = 31;
    BootstrapScorerOptimized scorer(data, config);
    double x[1] = {0.2};
    for (int y = 0; y < 2; ++y) {
        ScoreVector s = scorer.score_vector(x, y);
        for (double v : s.training) CHECK((v == 0.0 || v == -1.0));
        CHECK((s.test == 0.0 || s.test == -1.0));
    }
}

TEST_CASE("mean multiplicity of a fixed index inside a bootstrap sample is 1") {
    // Draws are uniform over n+1 indices with n+1 slots: any fixed index
    // appears once in expectation.
    std::mt19937_64 rng(99);
    std::size_t n = 50;
    std::uniform_int_distribution<std::size_t> pick(0, n);
    double total = 0;
    int reps = 4000;
    for (int r = 0; r < reps; ++r) {
        int hits = 0;
        for (std::size_t j = 0; j < n + 1; ++j)
            if (pick(rng) == 7) ++hits;
        total += hits;
    }
    CHECK(total / reps == Catch::Approx(1.0).margin(0.05));
}
