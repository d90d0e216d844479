#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "flfp/classifier.hpp"
#include "flfp/error.hpp"
#include "flfp/features.hpp"
#include "flfp/model_io.hpp"

namespace flfp {

/// counts[true][predicted], class order (CNN, RNN).
struct confusion_matrix {
    std::array<std::array<std::int64_t, 2>, 2> counts{{{0, 0}, {0, 0}}};

    std::int64_t total() const {
        return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
    }
};

inline confusion_matrix confusion(std::span<const arch_label> truth,
                                  std::span<const arch_label> predicted) {
    if (truth.size() != predicted.size())
        throw error(errc::length_mismatch,
                    std::to_string(truth.size()) + " truths vs " +
                        std::to_string(predicted.size()) + " predictions");
    if (truth.empty()) throw error(errc::empty_matrix, "nothing to count");
    confusion_matrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i)
        ++cm.counts[truth[i] == arch_label::cnn ? 0 : 1][predicted[i] == arch_label::cnn ? 0 : 1];
    return cm;
}

struct class_metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    // zero-denominator cases report 0 with the defined flag cleared
    bool precision_defined = true;
    bool recall_defined = true;
    bool f1_defined = true;
};

struct evaluation_report {
    confusion_matrix cm;
    std::array<class_metrics, 2> per_class; // [cnn, rnn]
    double accuracy = 0.0;
    std::vector<std::string> misclassified; // session ids when known
};

inline evaluation_report metrics(const confusion_matrix& cm) {
    if (cm.total() == 0) throw error(errc::empty_matrix, "empty confusion matrix");
    evaluation_report report;
    report.cm = cm;
    report.accuracy =
        static_cast<double>(cm.counts[0][0] + cm.counts[1][1]) / static_cast<double>(cm.total());
    for (int c = 0; c < 2; ++c) {
        const std::int64_t tp = cm.counts[c][c];
        const std::int64_t fp = cm.counts[1 - c][c];
        const std::int64_t fn = cm.counts[c][1 - c];
        class_metrics& m = report.per_class[static_cast<std::size_t>(c)];
        if (tp + fp > 0)
            m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        else
            m.precision_defined = false;
        if (tp + fn > 0)
            m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
        else
            m.recall_defined = false;
        if (m.precision_defined && m.recall_defined && m.precision + m.recall > 0.0)
            m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        else
            m.f1_defined = false;
    }
    return report;
}

inline evaluation_report evaluate(const any_model& model, const labeled_dataset& test) {
    if (test.rows.empty()) throw error(errc::empty_matrix, "empty test set");
    std::vector<arch_label> predicted;
    predicted.reserve(test.rows.size());
    for (const feature_row& row : test.rows) predicted.push_back(predict(model, row).label);

    evaluation_report report = metrics(confusion(test.labels, predicted));
    if (test.ids.size() == test.rows.size())
        for (std::size_t i = 0; i < test.rows.size(); ++i)
            if (predicted[i] != test.labels[i]) report.misclassified.push_back(test.ids[i]);
    return report;
}

// ---- rendering ----

namespace detail {

inline std::string round2(double v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string percent2(double v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.2f%%", v * 100.0);
    return buf;
}

} // namespace detail

/// Human-readable per-class table; metrics at 2 decimals, accuracy as a
/// 2-decimal percentage.
inline std::string render_report(const std::string& method, const evaluation_report& r) {
    std::string out;
    char line[128];
    std::snprintf(line, sizeof line, "%-10s %-6s %-10s %-8s %-10s %-9s\n", "Method", "Class",
                  "Precision", "Recall", "F1-score", "Accuracy");
    out += line;
    const char* class_names[2] = {"CNN", "RNN"};
    for (int c = 0; c < 2; ++c) {
        const class_metrics& m = r.per_class[static_cast<std::size_t>(c)];
        std::snprintf(line, sizeof line, "%-10s %-6s %-10s %-8s %-10s %-9s\n",
                      c == 0 ? method.c_str() : "", class_names[c],
                      detail::round2(m.precision).c_str(), detail::round2(m.recall).c_str(),
                      detail::round2(m.f1).c_str(),
                      c == 0 ? detail::percent2(r.accuracy).c_str() : "");
        out += line;
    }
    return out;
}

inline nlohmann::json report_to_json(const evaluation_report& r) {
    nlohmann::json j;
    j["confusion"] = {{r.cm.counts[0][0], r.cm.counts[0][1]},
                      {r.cm.counts[1][0], r.cm.counts[1][1]}};
    j["accuracy"] = r.accuracy;
    j["accuracy_display"] = detail::percent2(r.accuracy);
    const char* class_names[2] = {"CNN", "RNN"};
    for (int c = 0; c < 2; ++c) {
        const class_metrics& m = r.per_class[static_cast<std::size_t>(c)];
        j["classes"][class_names[c]] = {
            {"precision", m.precision},
            {"recall", m.recall},
            {"f1", m.f1},
            {"precision_defined", m.precision_defined},
            {"recall_defined", m.recall_defined},
            {"f1_defined", m.f1_defined},
            {"display",
             {{"precision", detail::round2(m.precision)},
              {"recall", detail::round2(m.recall)},
              {"f1", detail::round2(m.f1)}}},
        };
    }
    j["misclassified"] = r.misclassified;
    return j;
}

} // namespace flfp
