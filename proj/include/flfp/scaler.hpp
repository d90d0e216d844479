#pragma once

#include <vector>

#include "flfp/error.hpp"
#include "flfp/features.hpp"

namespace flfp {

/// Per-feature z-scoring with statistics taken from the training rows
/// only. Zero-variance features pass through unscaled.
struct scaler {
    std::vector<double> mean;
    std::vector<double> stddev; // population

    std::size_t arity() const { return mean.size(); }
};

inline scaler fit_scaler(const labeled_dataset& train) {
    if (train.rows.empty()) throw error(errc::empty_dataset, "cannot fit scaler on no rows");
    const std::size_t d = train.schema.arity();
    scaler s;
    s.mean.assign(d, 0.0);
    s.stddev.assign(d, 0.0);
    for (const feature_row& row : train.rows) {
        if (row.size() != d) throw error(errc::arity_mismatch, "row arity != schema arity");
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += row[j];
    }
    for (double& m : s.mean) m /= static_cast<double>(train.rows.size());
    for (const feature_row& row : train.rows)
        for (std::size_t j = 0; j < d; ++j)
            s.stddev[j] += (row[j] - s.mean[j]) * (row[j] - s.mean[j]);
    for (double& v : s.stddev) v = std::sqrt(v / static_cast<double>(train.rows.size()));
    return s;
}

inline feature_row apply_scaler(const scaler& s, const feature_row& row) {
    if (row.size() != s.arity())
        throw error(errc::arity_mismatch,
                    "row arity " + std::to_string(row.size()) + " != scaler arity " +
                        std::to_string(s.arity()));
    feature_row out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j)
        out[j] = s.stddev[j] > 0.0 ? (row[j] - s.mean[j]) / s.stddev[j] : row[j];
    return out;
}

inline std::vector<feature_row> apply_scaler(const scaler& s,
                                             const std::vector<feature_row>& rows) {
    std::vector<feature_row> out;
    out.reserve(rows.size());
    for (const feature_row& r : rows) out.push_back(apply_scaler(s, r));
    return out;
}

} // namespace flfp
