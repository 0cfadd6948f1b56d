#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "conformal/dataset.hpp"

namespace conformal {

/// Parameters for the seeded synthetic generators. Everything downstream is
/// a pure function of this struct.
struct GenSpec {
    Task task = Task::classification;
    std::size_t n = 100;
    std::size_t dim = 30;
    std::size_t classes = 2;      // classification only
    double class_sep = 2.0;       // center spacing along orthogonal directions
    double noise_sd = 0.1;        // regression only
    std::uint64_t seed = 0;

    void validate() const {
        if (n < 1) throw std::invalid_argument("n must be >= 1");
        if (dim < 1) throw std::invalid_argument("dim must be >= 1");
        if (task == Task::classification) {
            if (classes < 2) throw std::invalid_argument("classification needs >= 2 classes");
            if (classes > dim)
                throw std::invalid_argument("class count must not exceed dim "
                                            "(orthogonal centers need that many dimensions)");
        }
        if (noise_sd < 0.0) throw std::invalid_argument("noise_sd must be >= 0");
    }
};

/// Balanced Gaussian blobs: class y is a unit-variance isotropic normal
/// centered at class_sep times the y-th column of a random orthonormal
/// frame. Labels are assigned round-robin, then the rows are shuffled.
inline Dataset gen_classification(const GenSpec& spec) {
    spec.validate();
    if (spec.task != Task::classification)
        throw std::invalid_argument("gen_classification called with a regression spec");
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Eigen::Index p = static_cast<Eigen::Index>(spec.dim);
    Eigen::Index l = static_cast<Eigen::Index>(spec.classes);
    Eigen::MatrixXd raw(p, l);
    for (Eigen::Index c = 0; c < l; ++c)
        for (Eigen::Index r = 0; r < p; ++r) raw(r, c) = gauss(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    Eigen::MatrixXd frame = qr.householderQ() * Eigen::MatrixXd::Identity(p, l);

    Dataset data(Task::classification, spec.dim);
    std::vector<std::string> names;
    for (std::size_t c = 0; c < spec.classes; ++c) names.push_back(std::to_string(c));
    data.set_label_names(std::move(names));

    std::vector<Example> rows(spec.n);
    std::vector<double> object(spec.dim);
    for (std::size_t i = 0; i < spec.n; ++i) {
        int label = static_cast<int>(i % spec.classes);
        for (std::size_t d = 0; d < spec.dim; ++d)
            object[d] = spec.class_sep * frame(static_cast<Eigen::Index>(d), label) + gauss(rng);
        rows[i].object.assign(object.begin(), object.end());
        rows[i].label = label;
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    for (const Example& e : rows) data.add(e);
    return data;
}

/// Linear model with Gaussian features and noise: y = beta . x + eps,
/// beta and features standard normal, eps ~ N(0, noise_sd^2).
inline Dataset gen_regression(const GenSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<double> beta(spec.dim);
    for (double& b : beta) b = gauss(rng);

    Dataset data(Task::regression, spec.dim);
    std::vector<double> object(spec.dim);
    for (std::size_t i = 0; i < spec.n; ++i) {
        double y = 0.0;
        for (std::size_t d = 0; d < spec.dim; ++d) {
            object[d] = gauss(rng);
            y += beta[d] * object[d];
        }
        y += spec.noise_sd * gauss(rng);
        data.add_regression(object, y);
    }
    return data;
}

inline Dataset generate(const GenSpec& spec) {
    return spec.task == Task::classification ? gen_classification(spec) : gen_regression(spec);
}

struct TrainTestSplit {
    Dataset train;
    Dataset test;
};

/// Draws train and test from one generated sequence so they share the same
/// distribution; a positional split of exchangeable rows keeps both sides
/// exchangeable, which the coverage guarantees require.
inline TrainTestSplit gen_train_test(GenSpec spec, std::size_t train_n, std::size_t test_n) {
    spec.n = train_n + test_n;
    Dataset all = generate(spec);
    return {all.slice(0, train_n), all.slice(train_n, train_n + test_n)};
}

}  // namespace conformal
