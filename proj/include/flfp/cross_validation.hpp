#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "flfp/classifier.hpp"
#include "flfp/error.hpp"
#include "flfp/features.hpp"
#include "flfp/forest.hpp"
#include "flfp/gbm.hpp"
#include "flfp/rng.hpp"
#include "flfp/svm.hpp"

namespace flfp {

struct cv_result {
    std::vector<double> mean_accuracy; // one entry per grid point
    std::size_t chosen = 0;            // argmax, ties -> smallest index
};

namespace detail {

/// Stratified fold assignment: each class's row indices are shuffled
/// with the seeded stream and dealt round-robin across folds.
inline std::vector<int> stratified_folds(std::span<const arch_label> labels, int k,
                                         std::uint64_t seed) {
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < labels.size(); ++i)
        by_class[labels[i] == arch_label::cnn ? 0 : 1].push_back(i);

    std::vector<int> fold(labels.size(), 0);
    rng stream(derive_seed(seed, 0x5f01d5));
    for (auto& members : by_class) {
        for (std::size_t i = members.size(); i > 1; --i)
            std::swap(members[i - 1], members[stream.uniform_int(i)]);
        for (std::size_t i = 0; i < members.size(); ++i)
            fold[members[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    return fold;
}

} // namespace detail

/// Grid search with stratified k-fold cross-validation. k is reduced to
/// the smallest class count when necessary. train_fn(subset, params,
/// fold_seed) must return a model usable with predict(model, row).
template <typename Params, typename TrainFn>
cv_result grid_search_cv(const labeled_dataset& train, std::span<const Params> grid, int k_folds,
                         std::uint64_t seed, TrainFn&& train_fn) {
    if (grid.empty()) throw error(errc::empty_grid, "no grid points");
    if (k_folds < 2) throw error(errc::config_error, "k_folds must be >= 2");
    detail::require_two_classes(train);

    std::int64_t class_count[2] = {0, 0};
    for (arch_label l : train.labels) ++class_count[l == arch_label::cnn ? 0 : 1];
    const auto smallest = std::min(class_count[0], class_count[1]);
    if (smallest < 2)
        throw error(errc::too_few_samples, "each class needs >= 2 rows for cross-validation");
    const int k = std::min<std::int64_t>(k_folds, smallest);

    const std::vector<int> fold = detail::stratified_folds(train.labels, k, seed);

    cv_result result;
    result.mean_accuracy.reserve(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double accuracy_sum = 0.0;
        for (int f = 0; f < k; ++f) {
            labeled_dataset fit;
            fit.schema = train.schema;
            std::vector<std::size_t> held_out;
            for (std::size_t i = 0; i < train.rows.size(); ++i) {
                if (fold[i] == f) {
                    held_out.push_back(i);
                } else {
                    fit.rows.push_back(train.rows[i]);
                    fit.labels.push_back(train.labels[i]);
                }
            }
            const auto model = train_fn(fit, grid[g],
                                        derive_seed(seed, g, static_cast<std::uint64_t>(f)));
            std::size_t correct = 0;
            for (std::size_t i : held_out)
                if (predict(model, train.rows[i]).label == train.labels[i]) ++correct;
            accuracy_sum += static_cast<double>(correct) / static_cast<double>(held_out.size());
        }
        result.mean_accuracy.push_back(accuracy_sum / k);
    }
    for (std::size_t g = 1; g < grid.size(); ++g)
        if (result.mean_accuracy[g] > result.mean_accuracy[result.chosen]) result.chosen = g;
    return result;
}

// Default hyperparameter grids (tuning ranges are project defaults, not
// tuned to any particular corpus).

inline std::vector<forest_params> default_forest_grid() {
    std::vector<forest_params> grid;
    for (int n_trees : {50, 100, 200})
        for (int max_depth : {0, 4, 8}) { // 0 = unbounded
            forest_params p;
            p.n_trees = n_trees;
            p.max_depth = max_depth;
            grid.push_back(p);
        }
    return grid;
}

inline std::vector<svm_params> default_svm_grid() {
    std::vector<svm_params> grid;
    for (double c : {0.1, 1.0, 10.0, 100.0}) {
        for (kernel_spec k : {kernel_spec::linear(), kernel_spec::rbf(0.01),
                              kernel_spec::rbf(0.1), kernel_spec::rbf(1.0)}) {
            svm_params p;
            p.C = c;
            p.kernel = k;
            grid.push_back(p);
        }
    }
    return grid;
}

inline std::vector<gbm_params> default_gbm_grid() {
    std::vector<gbm_params> grid;
    for (int rounds : {50, 100})
        for (double lr : {0.05, 0.1, 0.3})
            for (int depth : {2, 3}) {
                gbm_params p;
                p.n_rounds = rounds;
                p.learning_rate = lr;
                p.max_depth = depth;
                grid.push_back(p);
            }
    return grid;
}

} // namespace flfp
