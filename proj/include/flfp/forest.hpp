#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "flfp/classifier.hpp"
#include "flfp/error.hpp"
#include "flfp/features.hpp"
#include "flfp/rng.hpp"
#include "flfp/tree.hpp"

namespace flfp {

struct forest_params {
    int n_trees = 100;
    int max_depth = 0;         // 0 = grow to purity
    int min_samples_split = 2;
    int m_try = 0;             // 0 = ceil(sqrt(d))
    bool bootstrap = true;     // off only for the plain-decision-tree test mode

    bool operator==(const forest_params&) const = default;
};

struct forest_model {
    std::vector<decision_tree> trees;
    forest_params params;
    std::uint64_t seed = 0;
    feature_schema schema;
    std::array<std::int64_t, 2> train_class_counts{0, 0}; // [cnn, rnn], vote tie-break
};

/// Bagged Gini trees. Tree i draws its bootstrap sample and split
/// candidates from an RNG stream derived from (seed, i), so training is
/// reproducible and parallelizable per tree.
inline forest_model train_forest(const labeled_dataset& train, const forest_params& params,
                                 std::uint64_t seed) {
    detail::require_two_classes(train);
    if (params.n_trees < 1) throw error(errc::config_error, "n_trees must be >= 1");

    const std::size_t n = train.rows.size();
    const std::size_t d = train.schema.arity();
    const std::size_t m_try =
        params.m_try > 0 ? static_cast<std::size_t>(params.m_try)
                         : static_cast<std::size_t>(
                               std::ceil(std::sqrt(static_cast<double>(d))));

    forest_model model;
    model.params = params;
    model.seed = seed;
    model.schema = train.schema;
    for (arch_label l : train.labels)
        ++model.train_class_counts[l == arch_label::cnn ? 0 : 1];

    model.trees.reserve(static_cast<std::size_t>(params.n_trees));
    for (int t = 0; t < params.n_trees; ++t) {
        rng stream(derive_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> sample(n);
        if (params.bootstrap) {
            for (std::size_t i = 0; i < n; ++i) sample[i] = stream.uniform_int(n);
        } else {
            for (std::size_t i = 0; i < n; ++i) sample[i] = i;
        }
        detail::classification_builder builder{train.rows, train.labels, d, m_try,
                                               params.max_depth,
                                               static_cast<std::size_t>(params.min_samples_split),
                                               &stream,
                                               {}};
        builder.grow(std::move(sample), 0);
        model.trees.push_back(std::move(builder.tree));
    }
    return model;
}

/// Majority vote; score is the winning vote fraction. Vote ties go to
/// the class with more training rows, then to CNN.
inline prediction predict(const forest_model& model, const feature_row& row) {
    if (row.size() != model.schema.arity())
        throw error(errc::arity_mismatch,
                    "row arity " + std::to_string(row.size()) + " != model arity " +
                        std::to_string(model.schema.arity()));
    std::array<std::int64_t, 2> votes{0, 0};
    for (const decision_tree& t : model.trees)
        ++votes[t.classify(row) == arch_label::cnn ? 0 : 1];

    arch_label winner;
    if (votes[0] != votes[1])
        winner = votes[0] > votes[1] ? arch_label::cnn : arch_label::rnn;
    else if (model.train_class_counts[0] != model.train_class_counts[1])
        winner = model.train_class_counts[0] > model.train_class_counts[1] ? arch_label::cnn
                                                                           : arch_label::rnn;
    else
        winner = arch_label::cnn;
    const double frac = static_cast<double>(votes[winner == arch_label::cnn ? 0 : 1]) /
                        static_cast<double>(model.trees.size());
    return {winner, frac};
}

} // namespace flfp
