#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "conformal/config.hpp"
#include "conformal/dataset.hpp"
#include "conformal/scorer.hpp"

namespace conformal {

/// Output dimension q of a feature map over p raw features.
inline std::size_t feature_dim(FeatureMapKind kind, std::size_t p) {
    switch (kind) {
        case FeatureMapKind::identity: return p;
        case FeatureMapKind::quadratic:
            // 1 + linear + upper-triangular quadratic monomials
            return 1 + p + p * (p + 1) / 2;
    }
    throw std::logic_error("unknown feature map");
}

inline Eigen::VectorXd feature_map(FeatureMapKind kind, std::span<const double> x) {
    if (kind == FeatureMapKind::identity)
        return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    std::size_t p = x.size();
    Eigen::VectorXd out(static_cast<Eigen::Index>(feature_dim(kind, p)));
    Eigen::Index at = 0;
    out[at++] = 1.0;
    for (std::size_t i = 0; i < p; ++i) out[at++] = x[i];
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i; j < p; ++j) out[at++] = x[i] * x[j];
    return out;
}

/// Ridge-regularized least-squares model in an explicit feature space,
/// together with the q x q projection matrix that makes exact one-example
/// updates possible.
struct LssvmModel {
    Eigen::VectorXd weights;  // w, dimension q
    Eigen::MatrixXd hat;      // Phi (Phi^T Phi + rho I)^-1 Phi^T, q x q, symmetric
    double ridge = 1.0;

    std::size_t q() const { return static_cast<std::size_t>(weights.size()); }
    double predict(const Eigen::VectorXd& phi) const { return weights.dot(phi); }
};

struct DegenerateUpdateError : std::runtime_error {
    explicit DegenerateUpdateError(const std::string& what) : std::runtime_error(what) {}
};

/// Batch training: w = Phi (Phi^T Phi + rho I_n)^-1 y, solved through the
/// equivalent q x q system (Phi Phi^T + rho I_q), which agrees by the
/// push-through identity. Empty input yields the zero model.
inline LssvmModel lssvm_train(const std::vector<Eigen::VectorXd>& features,
                              const std::vector<double>& targets, double ridge,
                              std::size_t q_hint = 0) {
    if (features.size() != targets.size())
        throw std::invalid_argument("lssvm_train: feature/target count mismatch");
    if (ridge <= 0.0) throw std::invalid_argument("lssvm_train: ridge must be > 0");
    std::size_t q = features.empty() ? q_hint : static_cast<std::size_t>(features[0].size());
    LssvmModel model;
    model.ridge = ridge;
    Eigen::Index qi = static_cast<Eigen::Index>(q);
    if (features.empty()) {
        model.weights = Eigen::VectorXd::Zero(qi);
        model.hat = Eigen::MatrixXd::Zero(qi, qi);
        return model;
    }
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(qi, qi);  // Phi Phi^T
    Eigen::VectorXd moment = Eigen::VectorXd::Zero(qi);    // Phi y
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].size() != qi)
            throw std::invalid_argument("lssvm_train: inconsistent feature dimension");
        gram.noalias() += features[i] * features[i].transpose();
        moment.noalias() += features[i] * targets[i];
    }
    Eigen::MatrixXd system = gram + ridge * Eigen::MatrixXd::Identity(qi, qi);
    Eigen::LDLT<Eigen::MatrixXd> solver(system);
    model.weights = solver.solve(moment);
    model.hat = solver.solve(gram);
    // Symmetrize: gram and its shifted inverse commute, so hat is symmetric
    // up to solver round-off.
    model.hat = ((model.hat + model.hat.transpose()) / 2.0).eval();
    return model;
}

namespace detail {

constexpr double lssvm_denominator_floor = 1e-12;

inline LssvmModel lssvm_update(const LssvmModel& model, const Eigen::VectorXd& phi, double target,
                               bool add) {
    Eigen::VectorXd v = model.hat * phi - phi;  // (C - I) phi
    double phi_v = phi.dot(v);                  // phi^T C phi - phi^T phi
    double den = add ? -phi_v + model.ridge : phi_v + model.ridge;
    if (std::abs(den) <= lssvm_denominator_floor)
        throw DegenerateUpdateError("degenerate update denominator");
    double residual = model.weights.dot(phi) - target;
    LssvmModel out;
    out.ridge = model.ridge;
    if (add) {
        out.weights = model.weights + v * (residual / den);
        out.hat = model.hat + (v * v.transpose()) / den;
    } else {
        out.weights = model.weights - v * (residual / den);
        out.hat = model.hat - (v * v.transpose()) / den;
    }
    return out;
}

}  // namespace detail

/// Learns one example exactly; returns a new model. Equals batch retraining
/// on the extended set up to round-off.
inline LssvmModel lssvm_increment(const LssvmModel& model, const Eigen::VectorXd& phi,
                                  double target) {
    return detail::lssvm_update(model, phi, target, /*add=*/true);
}

/// Unlearns one example that is part of the model's training multiset.
inline LssvmModel lssvm_decrement(const LssvmModel& model, const Eigen::VectorXd& phi,
                                  double target) {
    return detail::lssvm_update(model, phi, target, /*add=*/false);
}

namespace detail {

// Weight vector after unlearning (phi, target), skipping the hat update:
// the leave-one-out scores only need w.
inline double lssvm_loo_prediction(const LssvmModel& model, const Eigen::VectorXd& phi,
                                   double target, std::size_t index) {
    Eigen::VectorXd v = model.hat * phi - phi;
    double den = phi.dot(v) + model.ridge;
    if (std::abs(den) <= lssvm_denominator_floor)
        throw DegenerateUpdateError("degenerate update denominator at training index " +
                                    std::to_string(index));
    double residual = model.weights.dot(phi) - target;
    // (w - v * residual / den) . phi
    return model.weights.dot(phi) - v.dot(phi) * (residual / den);
}

inline void require_binary(const Dataset& data) {
    if (data.label_count() != 2)
        throw std::invalid_argument("lssvm requires a binary label alphabet, got " +
                                    std::to_string(data.label_count()) + " labels");
}

// Dense label ids 0/1 map to regression targets -1/+1.
inline double signed_target(int label) { return label == 0 ? -1.0 : 1.0; }

}  // namespace detail

/// Standard LS-SVM scorer: each leave-one-out score retrains the model from
/// scratch on the augmented set. Binary labels only.
class LssvmScorer : public NonconformityScorer {
public:
    LssvmScorer(Dataset data, const ScorerConfig& config)
        : data_(std::move(data)), ridge_(config.ridge), map_(config.feature_map) {
        config.validate();
        detail::require_binary(data_);
        for (std::size_t i = 0; i < data_.size(); ++i)
            features_.push_back(feature_map(map_, data_.object(i)));
    }

    ScoreVector score_vector(std::span<const double> object, int label) const override {
        std::size_t n = data_.size();
        Eigen::VectorXd test_phi = feature_map(map_, object);
        double test_target = detail::signed_target(label);
        ScoreVector out;
        out.training.resize(n);
        std::vector<Eigen::VectorXd> feats;
        std::vector<double> targets;
        feats.reserve(n);
        targets.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            feats.clear();
            targets.clear();
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                feats.push_back(features_[j]);
                targets.push_back(detail::signed_target(data_.label(j)));
            }
            feats.push_back(test_phi);
            targets.push_back(test_target);
            LssvmModel model = lssvm_train(feats, targets, ridge_, q());
            out.training[i] = -detail::signed_target(data_.label(i)) * model.predict(features_[i]);
        }
        feats.clear();
        targets.clear();
        for (std::size_t j = 0; j < n; ++j) {
            feats.push_back(features_[j]);
            targets.push_back(detail::signed_target(data_.label(j)));
        }
        LssvmModel base = lssvm_train(feats, targets, ridge_, q());
        out.test = -test_target * base.predict(test_phi);
        return out;
    }

    std::size_t training_size() const override { return data_.size(); }
    std::size_t label_count() const override { return data_.label_count(); }

private:
    std::size_t q() const { return feature_dim(map_, data_.dim()); }

    Dataset data_;
    double ridge_;
    FeatureMapKind map_;
    std::vector<Eigen::VectorXd> features_;
};

/// Optimized LS-SVM scorer: trains once, then per prediction increments the
/// model with the test example and derives every leave-one-out score by a
/// weight-only decrement from that incremented model. Incremental.
class LssvmScorerOptimized : public NonconformityScorer {
public:
    LssvmScorerOptimized(Dataset data, const ScorerConfig& config)
        : data_(std::move(data)), ridge_(config.ridge), map_(config.feature_map) {
        config.validate();
        detail::require_binary(data_);
        std::vector<double> targets;
        for (std::size_t i = 0; i < data_.size(); ++i) {
            features_.push_back(feature_map(map_, data_.object(i)));
            targets.push_back(detail::signed_target(data_.label(i)));
        }
        base_ = lssvm_train(features_, targets, ridge_, feature_dim(map_, data_.dim()));
    }

    ScoreVector score_vector(std::span<const double> object, int label) const override {
        std::size_t n = data_.size();
        Eigen::VectorXd test_phi = feature_map(map_, object);
        double test_target = detail::signed_target(label);
        LssvmModel augmented = lssvm_increment(base_, test_phi, test_target);
        ScoreVector out;
        out.training.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double yi = detail::signed_target(data_.label(i));
            out.training[i] =
                -yi * detail::lssvm_loo_prediction(augmented, features_[i], yi, i);
        }
        out.test = -test_target * base_.predict(test_phi);
        return out;
    }

    std::size_t training_size() const override { return data_.size(); }
    std::size_t label_count() const override { return data_.label_count(); }
    bool incremental() const override { return true; }

    void observe(const Example& example) override {
        Eigen::VectorXd phi = feature_map(map_, example.object);
        base_ = lssvm_increment(base_, phi, detail::signed_target(example.label));
        features_.push_back(std::move(phi));
        data_.add(example);
    }

    const LssvmModel& model() const { return base_; }

private:
    Dataset data_;
    double ridge_;
    FeatureMapKind map_;
    std::vector<Eigen::VectorXd> features_;
    LssvmModel base_;
};

}  // namespace conformal
