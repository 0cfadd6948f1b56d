#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "conformal/measures.hpp"
#include "conformal/parallel.hpp"
#include "conformal/scorer.hpp"
#include "conformal/scores.hpp"

#include "test_helpers.hpp"

using namespace conformal;

TEST_CASE("p-value counts ties as hits") {
    CHECK(compute_pvalue({{2, 2, 2, 2}, 2}) == 1.0);
    CHECK(compute_pvalue({{0.1, 0.2, 0.3, 0.4}, 9.0}) == 0.2);
    CHECK(compute_pvalue({{3, 1, 2}, 2}) == 0.75);
}

TEST_CASE("p-value of an empty conditioning set is 1") {
    CHECK(compute_pvalue({{}, 123.0}) == 1.0);
}

TEST_CASE("smoothed p-value weights ties by tau") {
    CHECK(compute_smoothed_pvalue({{2, 2}, 2}, 1.0) == 1.0);
    CHECK(compute_smoothed_pvalue({{2, 2}, 2}, 0.0) == 0.0);
    CHECK(compute_smoothed_pvalue({{3, 1}, 2}, 0.5) == 0.5);
}

TEST_CASE("p-values are multiples of 1/(n+1)") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 1 + rng() % 40;
        ScoreVector s;
        for (std::size_t i = 0; i < n; ++i) s.training.push_back(u(rng));
        s.test = u(rng);
        double p = compute_pvalue(s);
        double k = p * static_cast<double>(n + 1);
        CHECK(std::abs(k - std::round(k)) < 1e-9);
        CHECK(p >= 1.0 / static_cast<double>(n + 1));
        CHECK(p <= 1.0);
    }
}

TEST_CASE("prediction set filters by strict inequality") {
    PValueVector pv(2);
    pv[0] = 1.0;
    pv[1] = 0.2;
    auto set = prediction_set(pv, 0.5);
    REQUIRE(set.labels == std::vector<int>{0});

    CHECK(prediction_set(pv, 1.0).labels.empty());
    CHECK(prediction_set(pv, 0.0).labels.size() == 2);
}

TEST_CASE("prediction sets are nested in epsilon") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        PValueVector pv(5);
        for (int y = 0; y < 5; ++y) pv[y] = u(rng);
        double e1 = u(rng), e2 = u(rng);
        if (e1 > e2) std::swap(e1, e2);
        auto big = prediction_set(pv, e1);
        auto small = prediction_set(pv, e2);
        for (int y : small.labels) CHECK(big.contains(y));
    }
}

TEST_CASE("fuzziness subtracts the largest p-value once") {
    PValueVector pv(3);
    pv[0] = 1.0;
    pv[1] = 0.3;
    pv[2] = 0.1;
    CHECK(fuzziness(pv) == Catch::Approx(0.4));

    PValueVector single(1);
    single[0] = 0.7;
    CHECK(fuzziness(single) == 0.0);

    PValueVector tie(2);
    tie[0] = 0.5;
    tie[1] = 0.5;
    CHECK(fuzziness(tie) == Catch::Approx(0.5));
}

TEST_CASE("fuzziness stays within [0, labels - 1]") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t l = 1 + rng() % 6;
        PValueVector pv(l);
        for (std::size_t y = 0; y < l; ++y) pv[static_cast<int>(y)] = u(rng);
        double f = fuzziness(pv);
        CHECK(f >= 0.0);
        CHECK(f <= static_cast<double>(l - 1));
    }
}

TEST_CASE("classify produces one p-value per label and prefers the near class") {
    auto data = test_helpers::dataset_1d({{0, "A"}, {1, "A"}, {3, "B"}});
    ScorerConfig config;
    config.measure = MeasureKind::nn;
    KnnScorer scorer(data, config);

    double x[1] = {0.5};
    PValueVector pv = classify(scorer, x);
    REQUIRE(pv.label_count() == 2);
    CHECK(pv[0] == Catch::Approx(0.75));  // label A
    CHECK(pv[1] == Catch::Approx(0.25));  // label B
    CHECK(pv[0] > pv[1]);
}

TEST_CASE("observe on a standard scorer reports not incremental") {
    auto data = test_helpers::dataset_1d({{0, "A"}, {1, "B"}});
    ScorerConfig config;
    config.measure = MeasureKind::knn;
    KnnScorer scorer(data, config);
    CHECK_FALSE(scorer.incremental());
    Example e;
    e.object = {0.5};
    e.label = 0;
    CHECK_THROWS_AS(scorer.observe(e), NotIncrementalError);
}

TEST_CASE("observe then classify matches retraining from scratch (knn)") {
    auto data = test_helpers::random_classification(50, 3, 2, 21);
    ScorerConfig config;
    config.measure = MeasureKind::knn;
    config.k = 5;

    KnnScorerOptimized live(data, config);
    auto extra = test_helpers::random_classification(8, 3, 2, 22);
    Dataset grown = data;
    for (std::size_t i = 0; i < extra.size(); ++i) {
        live.observe(extra.example(i));
        grown.add(extra.example(i));
    }
    KnnScorerOptimized retrained(grown, config);

    auto probe = test_helpers::random_classification(5, 3, 2, 23);
    for (std::size_t i = 0; i < probe.size(); ++i) {
        PValueVector a = classify(live, probe.object(i));
        PValueVector b = classify(retrained, probe.object(i));
        for (int y = 0; y < 2; ++y) CHECK(a[y] == b[y]);
    }
}

TEST_CASE("parallel classification of a shared scorer matches serial") {
    auto data = test_helpers::random_classification(60, 3, 3, 51);
    auto probe = test_helpers::random_classification(24, 3, 3, 52);
    ScorerConfig config;
    config.measure = MeasureKind::knn;
    config.k = 5;
    KnnScorerOptimized scorer(data, config);

    std::vector<PValueVector> serial(probe.size()), parallel(probe.size());
    for (std::size_t i = 0; i < probe.size(); ++i) serial[i] = classify(scorer, probe.object(i));
    parallel_for(probe.size(), 4,
                 [&](std::size_t i) { parallel[i] = classify(scorer, probe.object(i)); });
    for (std::size_t i = 0; i < probe.size(); ++i)
        for (int y = 0; y < 3; ++y) CHECK(serial[i][y] == parallel[i][y]);
}

TEST_CASE("smoothed online mode is deterministic per seed") {
    auto stream_data = test_helpers::random_classification(30, 2, 2, 61);
    std::vector<Example> stream;
    for (std::size_t i = 0; i < stream_data.size(); ++i) stream.push_back(stream_data.example(i));
    ScorerConfig config;
    config.measure = MeasureKind::knn;
    config.k = 3;

    OnlineOptions options;
    options.smoothed = true;
    options.seed = 99;
    Dataset empty(Task::classification, 2);
    empty.set_label_names(stream_data.label_names());

    KnnScorerOptimized a(empty, config);
    KnnScorerOptimized b(empty, config);
    auto pa = online_pvalues(a, stream, options);
    auto pb = online_pvalues(b, stream, options);
    CHECK(pa == pb);
    for (double p : pa) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("online stream p-values equal per-step batch recomputation") {
    auto stream_data = test_helpers::random_classification(40, 2, 2, 31);
    std::vector<Example> stream;
    for (std::size_t i = 0; i < stream_data.size(); ++i) stream.push_back(stream_data.example(i));

    ScorerConfig config;
    config.measure = MeasureKind::simplified_knn;
    config.k = 3;

    Dataset empty(Task::classification, 2);
    empty.set_label_names(stream_data.label_names());
    KnnScorerOptimized online(empty, config);
    auto streamed = online_pvalues(online, stream);

    Dataset prefix(Task::classification, 2);
    prefix.set_label_names(stream_data.label_names());
    for (std::size_t i = 0; i < stream.size(); ++i) {
        KnnScorer batch(prefix, config);
        double expected = compute_pvalue(batch.score_vector(stream[i].object, stream[i].label));
        CHECK(streamed[i] == expected);
        prefix.add(stream[i]);
    }
}
