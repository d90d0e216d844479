#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "flfp/classifier.hpp"
#include "flfp/error.hpp"
#include "flfp/features.hpp"
#include "flfp/tree.hpp"

namespace flfp {

struct gbm_params {
    int n_rounds = 100;
    double learning_rate = 0.1;
    int max_depth = 3;

    bool operator==(const gbm_params&) const = default;
};

/// Binary logistic boosting: score F(x) = initial log-odds plus
/// learning_rate-weighted regression trees fit to (y - p) residuals
/// with Newton leaf values. CNN is the positive class.
struct gbm_model {
    double initial_score = 0.0;
    std::vector<decision_tree> trees;
    gbm_params params;
    feature_schema schema;
    std::vector<double> train_losses; // mean logistic loss after each round
    std::uint64_t seed = 0;           // provenance only; training is seed-free
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double gbm_score(const gbm_model& m, const feature_row& row) {
    if (row.size() != m.schema.arity())
        throw error(errc::arity_mismatch,
                    "row arity " + std::to_string(row.size()) + " != model arity " +
                        std::to_string(m.schema.arity()));
    double f = m.initial_score;
    for (const decision_tree& t : m.trees) f += m.params.learning_rate * t.regress(row);
    return f;
}

/// p = sigmoid(F(x)); p >= 0.5 predicts CNN. Score is the probability
/// of the predicted label.
inline prediction predict(const gbm_model& m, const feature_row& row) {
    const double p = sigmoid(gbm_score(m, row));
    return p >= 0.5 ? prediction{arch_label::cnn, p} : prediction{arch_label::rnn, 1.0 - p};
}

inline gbm_model train_gbm(const labeled_dataset& train, const gbm_params& params) {
    detail::require_two_classes(train);
    if (params.n_rounds < 1) throw error(errc::config_error, "n_rounds must be >= 1");
    if (!(params.learning_rate > 0.0))
        throw error(errc::config_error, "learning_rate must be > 0");

    const std::size_t n = train.rows.size();
    std::vector<double> y(n);
    std::int64_t positives = 0;
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = train.labels[i] == arch_label::cnn ? 1.0 : 0.0;
        positives += train.labels[i] == arch_label::cnn ? 1 : 0;
    }

    gbm_model model;
    model.params = params;
    model.schema = train.schema;
    model.initial_score =
        std::log(static_cast<double>(positives) / static_cast<double>(n - positives));

    std::vector<double> f(n, model.initial_score);
    std::vector<double> residuals(n), hessians(n);

    auto mean_logistic_loss = [&]() {
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = std::clamp(sigmoid(f[i]), 1e-12, 1.0 - 1e-12);
            loss -= y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p);
        }
        return loss / static_cast<double>(n);
    };

    for (int round = 0; round < params.n_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(f[i]);
            residuals[i] = y[i] - p;
            hessians[i] = p * (1.0 - p);
        }
        detail::regression_builder builder{train.rows, residuals, hessians,
                                           train.schema.arity(), params.max_depth, {}};
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        builder.grow(std::move(all), 0);
        for (std::size_t i = 0; i < n; ++i)
            f[i] += params.learning_rate * builder.tree.regress(train.rows[i]);
        model.trees.push_back(std::move(builder.tree));
        model.train_losses.push_back(mean_logistic_loss());
    }
    return model;
}

} // namespace flfp
