#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "flfp/classifier.hpp"
#include "flfp/error.hpp"
#include "flfp/features.hpp"
#include "flfp/scaler.hpp"

namespace flfp {

struct kernel_spec {
    enum class kind : std::uint8_t { linear, rbf };
    kind type = kind::linear;
    double gamma = 0.1; // rbf only

    bool operator==(const kernel_spec&) const = default;

    static kernel_spec linear() { return {kind::linear, 0.0}; }
    static kernel_spec rbf(double gamma) { return {kind::rbf, gamma}; }

    std::string to_string() const {
        if (type == kind::linear) return "linear";
        char buf[40];
        std::snprintf(buf, sizeof buf, "rbf(gamma=%g)", gamma);
        return buf;
    }
};

inline double kernel_eval(const kernel_spec& k, const feature_row& a, const feature_row& b) {
    if (k.type == kernel_spec::kind::linear) {
        double dot = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
        return dot;
    }
    double dist = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dist += (a[i] - b[i]) * (a[i] - b[i]);
    return std::exp(-k.gamma * dist);
}

struct svm_params {
    double C = 1.0;
    kernel_spec kernel = kernel_spec::linear();
    double tol = 1e-3;
    int max_passes = 10; // quiet sweeps before declaring convergence

    bool operator==(const svm_params&) const = default;
};

/// Soft-margin SVM in dual form. Features are standardized with the
/// stored scaler; CNN encodes to +1, RNN to -1. Decision value is
/// sum(alpha_i y_i K(x_i, x)) + bias.
struct svm_model {
    std::vector<feature_row> support; // standardized rows
    std::vector<double> alpha_y;      // alpha_i * y_i per support vector
    double bias = 0.0;
    svm_params params;                // C, kernel, tol, max_passes as trained
    scaler sc;
    feature_schema schema;
    bool converged = true;
    int sweeps = 0;
    std::uint64_t seed = 0; // provenance only; training is seed-free
};

inline double decision_value(const svm_model& m, const feature_row& row) {
    if (row.size() != m.schema.arity())
        throw error(errc::arity_mismatch,
                    "row arity " + std::to_string(row.size()) + " != model arity " +
                        std::to_string(m.schema.arity()));
    const feature_row x = apply_scaler(m.sc, row);
    double f = m.bias;
    for (std::size_t i = 0; i < m.support.size(); ++i)
        f += m.alpha_y[i] * kernel_eval(m.params.kernel, m.support[i], x);
    return f;
}

/// sign(f) with sign(0) = + (CNN); score is |f|.
inline prediction predict(const svm_model& m, const feature_row& row) {
    const double f = decision_value(m, row);
    return {f >= 0.0 ? arch_label::cnn : arch_label::rnn, std::fabs(f)};
}

/// Sequential minimal optimization: sweeps the samples, pairs each KKT
/// violator with the partner of largest |E_i - E_j| (falling back to an
/// index scan), and solves each pair analytically. Converges after
/// max_passes consecutive sweeps without an update; a hard sweep cap
/// marks the model non-converged instead of looping.
inline svm_model train_svm(const labeled_dataset& train, const svm_params& params) {
    detail::require_two_classes(train);
    if (!(params.C > 0.0)) throw error(errc::config_error, "C must be > 0");
    if (!(params.tol > 0.0)) throw error(errc::config_error, "tol must be > 0");

    const std::size_t n = train.rows.size();
    const scaler sc = fit_scaler(train);
    const std::vector<feature_row> x = apply_scaler(sc, train.rows);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = train.labels[i] == arch_label::cnn ? +1.0 : -1.0;

    std::vector<double> gram(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            gram[i * n + j] = gram[j * n + i] = kernel_eval(params.kernel, x[i], x[j]);

    std::vector<double> alpha(n, 0.0);
    double b = 0.0;

    auto decision_at = [&](std::size_t i) {
        double f = b;
        for (std::size_t j = 0; j < n; ++j)
            if (alpha[j] > 0.0) f += alpha[j] * y[j] * gram[j * n + i];
        return f;
    };

    const double C = params.C;
    auto take_step = [&](std::size_t i, std::size_t j, double e_i) -> bool {
        if (i == j) return false;
        const double e_j = decision_at(j) - y[j];
        const double a_i_old = alpha[i];
        const double a_j_old = alpha[j];
        double lo, hi;
        if (y[i] != y[j]) {
            lo = std::max(0.0, a_j_old - a_i_old);
            hi = std::min(C, C + a_j_old - a_i_old);
        } else {
            lo = std::max(0.0, a_i_old + a_j_old - C);
            hi = std::min(C, a_i_old + a_j_old);
        }
        if (lo >= hi) return false;
        const double eta = gram[i * n + i] + gram[j * n + j] - 2.0 * gram[i * n + j];
        if (eta <= 0.0) return false;

        double a_j = a_j_old + y[j] * (e_i - e_j) / eta;
        a_j = std::min(hi, std::max(lo, a_j));
        if (std::fabs(a_j - a_j_old) < 1e-9) return false;
        const double a_i = a_i_old + y[i] * y[j] * (a_j_old - a_j);

        alpha[i] = a_i;
        alpha[j] = a_j;

        const double b1 = b - e_i - y[i] * (a_i - a_i_old) * gram[i * n + i] -
                          y[j] * (a_j - a_j_old) * gram[i * n + j];
        const double b2 = b - e_j - y[i] * (a_i - a_i_old) * gram[i * n + j] -
                          y[j] * (a_j - a_j_old) * gram[j * n + j];
        if (a_i > 0.0 && a_i < C)
            b = b1;
        else if (a_j > 0.0 && a_j < C)
            b = b2;
        else
            b = (b1 + b2) / 2.0;
        return true;
    };

    constexpr int kSweepCap = 10000;
    int quiet_passes = 0;
    int sweeps = 0;
    while (quiet_passes < params.max_passes && sweeps < kSweepCap) {
        std::size_t changed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e_i = decision_at(i) - y[i];
            const double r = y[i] * e_i;
            if (!((r < -params.tol && alpha[i] < C) || (r > params.tol && alpha[i] > 0.0)))
                continue;
            // second-choice heuristic: largest |E_i - E_j|, ties -> smallest j
            std::size_t best_j = i;
            double best_gap = -1.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double gap = std::fabs(e_i - (decision_at(j) - y[j]));
                if (gap > best_gap) {
                    best_gap = gap;
                    best_j = j;
                }
            }
            if (take_step(i, best_j, e_i)) {
                ++changed;
                continue;
            }
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i || j == best_j) continue;
                if (take_step(i, j, e_i)) {
                    ++changed;
                    break;
                }
            }
        }
        ++sweeps;
        quiet_passes = changed == 0 ? quiet_passes + 1 : 0;
    }

    svm_model model;
    model.params = params;
    model.sc = sc;
    model.schema = train.schema;
    model.bias = b;
    model.converged = quiet_passes >= params.max_passes;
    model.sweeps = sweeps;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > 1e-8) {
            model.support.push_back(x[i]);
            model.alpha_y.push_back(alpha[i] * y[i]);
        }
    }
    if (model.support.empty()) {
        // all multipliers at zero (already separated at tol); keep one
        // row so the model stays well-formed, with zero weight
        model.support.push_back(x[0]);
        model.alpha_y.push_back(0.0);
    }
    return model;
}

} // namespace flfp
