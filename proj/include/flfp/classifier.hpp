#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "flfp/error.hpp"
#include "flfp/features.hpp"

namespace flfp {

enum class classifier_kind : std::uint8_t { forest, svm, gbm };

inline const char* to_string(classifier_kind k) {
    switch (k) {
        case classifier_kind::forest: return "forest";
        case classifier_kind::svm:    return "svm";
        case classifier_kind::gbm:    return "gbm";
    }
    return "?";
}

inline classifier_kind parse_classifier_kind(std::string_view s) {
    if (s == "forest") return classifier_kind::forest;
    if (s == "svm") return classifier_kind::svm;
    if (s == "gbm") return classifier_kind::gbm;
    throw error(errc::config_error, "unknown classifier '" + std::string(s) + "'");
}

struct prediction {
    arch_label label;
    double score; // vote fraction, |decision value|, or class probability
};

namespace detail {

inline void require_two_classes(const labeled_dataset& train) {
    if (train.rows.empty()) throw error(errc::empty_dataset, "no training rows");
    std::array<std::int64_t, 2> counts{0, 0};
    for (arch_label l : train.labels) ++counts[l == arch_label::cnn ? 0 : 1];
    if (counts[0] == 0 || counts[1] == 0)
        throw error(errc::single_class_dataset, "training set must contain both classes");
}

} // namespace detail

} // namespace flfp
