#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "flfp/error.hpp"
#include "flfp/features.hpp"
#include "flfp/rng.hpp"

namespace flfp {

/// One node of a binary decision tree, stored flat. feature < 0 marks a
/// leaf. Classification leaves carry class counts and a label;
/// regression leaves carry a value. Routing rule: x[feature] <=
/// threshold goes left.
struct tree_node {
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::array<std::int64_t, 2> class_counts{0, 0}; // [cnn, rnn]
    arch_label prediction = arch_label::cnn;
    double value = 0.0;
};

struct decision_tree {
    std::vector<tree_node> nodes; // root at index 0

    const tree_node& route(const feature_row& row) const {
        std::size_t i = 0;
        while (nodes[i].feature >= 0) {
            const tree_node& n = nodes[i];
            i = static_cast<std::size_t>(
                row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
        }
        return nodes[i];
    }

    arch_label classify(const feature_row& row) const { return route(row).prediction; }
    double regress(const feature_row& row) const { return route(row).value; }
};

namespace detail {

struct best_split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double score = 0.0; // lower is better
};

/// Candidate thresholds are midpoints between consecutive distinct
/// sorted values. A midpoint that rounds onto the upper value is pulled
/// back to the lower one so `x <= threshold` still splits the pair.
inline double midpoint_threshold(double lo_value, double hi_value) {
    const double mid = lo_value + (hi_value - lo_value) / 2.0;
    return (mid >= hi_value || mid < lo_value) ? lo_value : mid;
}

inline double gini_pair(std::int64_t a, std::int64_t b) {
    const double n = static_cast<double>(a + b);
    if (n == 0.0) return 0.0;
    const double pa = static_cast<double>(a) / n;
    const double pb = static_cast<double>(b) / n;
    return 1.0 - (pa * pa + pb * pb);
}

struct sample_ref {
    double value;
    std::size_t index;
};

/// Best Gini split for one feature over the given node samples.
/// Strictly-better comparisons keep the first optimum, so ties resolve
/// to the earlier candidate feature and the smaller threshold.
inline void scan_gini_split(std::span<const feature_row> rows,
                            std::span<const arch_label> labels,
                            std::span<const std::size_t> indices, std::size_t feature,
                            best_split& best) {
    std::vector<sample_ref> sorted;
    sorted.reserve(indices.size());
    for (std::size_t i : indices) sorted.push_back({rows[i][feature], i});
    std::sort(sorted.begin(), sorted.end(), [](const sample_ref& a, const sample_ref& b) {
        return a.value < b.value;
    });

    std::array<std::int64_t, 2> right{0, 0};
    for (std::size_t i : indices) ++right[labels[i] == arch_label::cnn ? 0 : 1];
    std::array<std::int64_t, 2> left{0, 0};
    const double n = static_cast<double>(indices.size());

    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        ++left[labels[sorted[i].index] == arch_label::cnn ? 0 : 1];
        --right[labels[sorted[i].index] == arch_label::cnn ? 0 : 1];
        if (sorted[i].value == sorted[i + 1].value) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        const double score =
            (nl * gini_pair(left[0], left[1]) + nr * gini_pair(right[0], right[1])) / n;
        if (!best.found || score < best.score) {
            best.found = true;
            best.feature = feature;
            best.threshold = midpoint_threshold(sorted[i].value, sorted[i + 1].value);
            best.score = score;
        }
    }
}

struct classification_builder {
    std::span<const feature_row> rows;
    std::span<const arch_label> labels;
    std::size_t n_features;
    std::size_t m_try;
    int max_depth; // 0 = unbounded
    std::size_t min_samples_split;
    rng* random;

    decision_tree tree;

    /// m_try features sampled without replacement per split; when m_try
    /// covers all features the canonical ascending order is used so the
    /// tie-break order is well-defined.
    std::vector<std::size_t> candidate_features() {
        std::vector<std::size_t> all(n_features);
        for (std::size_t i = 0; i < n_features; ++i) all[i] = i;
        if (m_try >= n_features) return all;
        for (std::size_t i = 0; i < m_try; ++i) {
            const std::size_t j = i + random->uniform_int(n_features - i);
            std::swap(all[i], all[j]);
        }
        all.resize(m_try);
        return all;
    }

    std::int32_t make_leaf(std::span<const std::size_t> indices) {
        tree_node leaf;
        for (std::size_t i : indices) ++leaf.class_counts[labels[i] == arch_label::cnn ? 0 : 1];
        leaf.prediction =
            leaf.class_counts[1] > leaf.class_counts[0] ? arch_label::rnn : arch_label::cnn;
        tree.nodes.push_back(leaf);
        return static_cast<std::int32_t>(tree.nodes.size() - 1);
    }

    std::int32_t grow(std::vector<std::size_t> indices, int depth) {
        std::array<std::int64_t, 2> counts{0, 0};
        for (std::size_t i : indices) ++counts[labels[i] == arch_label::cnn ? 0 : 1];
        const bool pure = counts[0] == 0 || counts[1] == 0;
        if (pure || indices.size() < min_samples_split ||
            (max_depth > 0 && depth >= max_depth))
            return make_leaf(indices);

        best_split best;
        for (std::size_t f : candidate_features())
            scan_gini_split(rows, labels, indices, f, best);
        if (!best.found) return make_leaf(indices); // all candidates constant

        std::vector<std::size_t> left_idx, right_idx;
        for (std::size_t i : indices)
            (rows[i][best.feature] <= best.threshold ? left_idx : right_idx).push_back(i);

        tree.nodes.emplace_back();
        const auto node = static_cast<std::int32_t>(tree.nodes.size() - 1);
        tree.nodes[static_cast<std::size_t>(node)].feature =
            static_cast<std::int32_t>(best.feature);
        tree.nodes[static_cast<std::size_t>(node)].threshold = best.threshold;
        indices.clear();
        indices.shrink_to_fit();
        const std::int32_t l = grow(std::move(left_idx), depth + 1);
        const std::int32_t r = grow(std::move(right_idx), depth + 1);
        tree.nodes[static_cast<std::size_t>(node)].left = l;
        tree.nodes[static_cast<std::size_t>(node)].right = r;
        return node;
    }
};

/// Regression tree on (residual, hessian) pairs with squared-error
/// splits and Newton leaf values sum(r)/max(sum(h), floor).
struct regression_builder {
    std::span<const feature_row> rows;
    std::span<const double> residuals;
    std::span<const double> hessians;
    std::size_t n_features;
    int max_depth;

    decision_tree tree;

    std::int32_t make_leaf(std::span<const std::size_t> indices) {
        tree_node leaf;
        double sum_r = 0.0, sum_h = 0.0;
        for (std::size_t i : indices) {
            sum_r += residuals[i];
            sum_h += hessians[i];
        }
        leaf.value = sum_r / std::max(sum_h, 1e-12);
        tree.nodes.push_back(leaf);
        return static_cast<std::int32_t>(tree.nodes.size() - 1);
    }

    std::int32_t grow(std::vector<std::size_t> indices, int depth) {
        if (indices.size() < 2 || (max_depth > 0 && depth >= max_depth))
            return make_leaf(indices);

        best_split best;
        for (std::size_t f = 0; f < n_features; ++f) {
            std::vector<sample_ref> sorted;
            sorted.reserve(indices.size());
            for (std::size_t i : indices) sorted.push_back({rows[i][f], i});
            std::sort(sorted.begin(), sorted.end(),
                      [](const sample_ref& a, const sample_ref& b) { return a.value < b.value; });

            double total = 0.0, total_sq = 0.0;
            for (std::size_t i : indices) {
                total += residuals[i];
                total_sq += residuals[i] * residuals[i];
            }
            double left_sum = 0.0, left_sq = 0.0;
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                const double r = residuals[sorted[i].index];
                left_sum += r;
                left_sq += r * r;
                if (sorted[i].value == sorted[i + 1].value) continue;
                const double nl = static_cast<double>(i + 1);
                const double nr = static_cast<double>(indices.size()) - nl;
                const double sse_l = left_sq - left_sum * left_sum / nl;
                const double right_sum = total - left_sum;
                const double sse_r = (total_sq - left_sq) - right_sum * right_sum / nr;
                const double score = sse_l + sse_r;
                if (!best.found || score < best.score) {
                    best.found = true;
                    best.feature = f;
                    best.threshold = midpoint_threshold(sorted[i].value, sorted[i + 1].value);
                    best.score = score;
                }
            }
        }
        if (!best.found) return make_leaf(indices);

        std::vector<std::size_t> left_idx, right_idx;
        for (std::size_t i : indices)
            (rows[i][best.feature] <= best.threshold ? left_idx : right_idx).push_back(i);

        tree.nodes.emplace_back();
        const auto node = static_cast<std::int32_t>(tree.nodes.size() - 1);
        tree.nodes[static_cast<std::size_t>(node)].feature =
            static_cast<std::int32_t>(best.feature);
        tree.nodes[static_cast<std::size_t>(node)].threshold = best.threshold;
        indices.clear();
        indices.shrink_to_fit();
        const std::int32_t l = grow(std::move(left_idx), depth + 1);
        const std::int32_t r = grow(std::move(right_idx), depth + 1);
        tree.nodes[static_cast<std::size_t>(node)].left = l;
        tree.nodes[static_cast<std::size_t>(node)].right = r;
        return node;
    }
};

} // namespace detail

} // namespace flfp
