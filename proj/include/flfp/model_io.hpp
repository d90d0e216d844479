#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "flfp/classifier.hpp"
#include "flfp/error.hpp"
#include "flfp/forest.hpp"
#include "flfp/gbm.hpp"
#include "flfp/svm.hpp"

namespace flfp {

using any_model = std::variant<forest_model, svm_model, gbm_model>;

inline constexpr int kModelFormatVersion = 1;

inline prediction predict(const any_model& m, const feature_row& row) {
    return std::visit([&](const auto& model) { return predict(model, row); }, m);
}

inline const feature_schema& model_schema(const any_model& m) {
    return std::visit([](const auto& model) -> const feature_schema& { return model.schema; }, m);
}

inline classifier_kind model_kind(const any_model& m) {
    if (std::holds_alternative<forest_model>(m)) return classifier_kind::forest;
    if (std::holds_alternative<svm_model>(m)) return classifier_kind::svm;
    return classifier_kind::gbm;
}

namespace detail {

inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline nlohmann::json tree_to_json(const decision_tree& t) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const tree_node& n : t.nodes)
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.class_counts[0],
                         n.class_counts[1], n.prediction == arch_label::cnn ? 0 : 1, n.value});
    return nodes;
}

inline decision_tree tree_from_json(const nlohmann::json& j) {
    decision_tree t;
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 8)
            throw error(errc::corrupt_model, "malformed tree node");
        tree_node n;
        n.feature = e[0].get<std::int32_t>();
        n.threshold = e[1].get<double>();
        n.left = e[2].get<std::int32_t>();
        n.right = e[3].get<std::int32_t>();
        n.class_counts = {e[4].get<std::int64_t>(), e[5].get<std::int64_t>()};
        n.prediction = e[6].get<int>() == 0 ? arch_label::cnn : arch_label::rnn;
        n.value = e[7].get<double>();
        t.nodes.push_back(n);
    }
    if (t.nodes.empty()) throw error(errc::corrupt_model, "empty tree");
    return t;
}

inline nlohmann::json kernel_to_json(const kernel_spec& k) {
    if (k.type == kernel_spec::kind::linear) return {{"type", "linear"}};
    return {{"type", "rbf"}, {"gamma", k.gamma}};
}

inline kernel_spec kernel_from_json(const nlohmann::json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "linear") return kernel_spec::linear();
    if (type == "rbf") return kernel_spec::rbf(j.at("gamma").get<double>());
    throw error(errc::corrupt_model, "unknown kernel '" + type + "'");
}

inline nlohmann::json params_to_json(const forest_params& p) {
    return {{"n_trees", p.n_trees},
            {"max_depth", p.max_depth},
            {"min_samples_split", p.min_samples_split},
            {"m_try", p.m_try},
            {"bootstrap", p.bootstrap}};
}

inline nlohmann::json params_to_json(const svm_params& p) {
    return {{"C", p.C},
            {"kernel", kernel_to_json(p.kernel)},
            {"tol", p.tol},
            {"max_passes", p.max_passes}};
}

inline nlohmann::json params_to_json(const gbm_params& p) {
    return {{"n_rounds", p.n_rounds},
            {"learning_rate", p.learning_rate},
            {"max_depth", p.max_depth}};
}

} // namespace detail

/// Model file layout: a JSON object with the fixed top-level keys
/// format_version, classifier_kind, schema, params, seed, payload,
/// checksum. The checksum is FNV-1a64 over the compact payload dump;
/// files with an unknown version or a stale checksum are rejected.
inline std::string save_model(const any_model& m) {
    nlohmann::json doc;
    doc["format_version"] = kModelFormatVersion;
    doc["classifier_kind"] = to_string(model_kind(m));
    doc["schema"] = model_schema(m).names;

    nlohmann::json payload;
    std::uint64_t seed = 0;
    if (const auto* forest = std::get_if<forest_model>(&m)) {
        seed = forest->seed;
        doc["params"] = detail::params_to_json(forest->params);
        payload["train_class_counts"] = forest->train_class_counts;
        nlohmann::json trees = nlohmann::json::array();
        for (const decision_tree& t : forest->trees) trees.push_back(detail::tree_to_json(t));
        payload["trees"] = std::move(trees);
    } else if (const auto* svm = std::get_if<svm_model>(&m)) {
        seed = svm->seed;
        doc["params"] = detail::params_to_json(svm->params);
        payload["support"] = svm->support;
        payload["alpha_y"] = svm->alpha_y;
        payload["bias"] = svm->bias;
        payload["scaler_mean"] = svm->sc.mean;
        payload["scaler_std"] = svm->sc.stddev;
        payload["converged"] = svm->converged;
        payload["sweeps"] = svm->sweeps;
    } else {
        const auto& gbm = std::get<gbm_model>(m);
        seed = gbm.seed;
        doc["params"] = detail::params_to_json(gbm.params);
        payload["initial_score"] = gbm.initial_score;
        payload["train_losses"] = gbm.train_losses;
        nlohmann::json trees = nlohmann::json::array();
        for (const decision_tree& t : gbm.trees) trees.push_back(detail::tree_to_json(t));
        payload["trees"] = std::move(trees);
    }
    doc["seed"] = seed;
    doc["checksum"] = detail::hex64(detail::fnv1a64(payload.dump()));
    doc["payload"] = std::move(payload);
    return doc.dump(2) + "\n";
}

inline any_model load_model(std::string_view bytes) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::exception& e) {
        throw error(errc::corrupt_model, std::string("not a model file: ") + e.what());
    }
    try {
        if (doc.at("format_version").get<int>() != kModelFormatVersion)
            throw error(errc::corrupt_model,
                        "unsupported format_version " + doc.at("format_version").dump());
        const nlohmann::json& payload = doc.at("payload");
        const std::string checksum = doc.at("checksum").get<std::string>();
        if (checksum != detail::hex64(detail::fnv1a64(payload.dump())))
            throw error(errc::corrupt_model, "checksum mismatch");

        feature_schema schema;
        schema.names = doc.at("schema").get<std::vector<std::string>>();
        const std::uint64_t seed = doc.at("seed").get<std::uint64_t>();
        const classifier_kind kind =
            parse_classifier_kind(doc.at("classifier_kind").get<std::string>());
        const nlohmann::json& params = doc.at("params");

        if (kind == classifier_kind::forest) {
            forest_model m;
            m.schema = std::move(schema);
            m.seed = seed;
            m.params.n_trees = params.at("n_trees").get<int>();
            m.params.max_depth = params.at("max_depth").get<int>();
            m.params.min_samples_split = params.at("min_samples_split").get<int>();
            m.params.m_try = params.at("m_try").get<int>();
            m.params.bootstrap = params.at("bootstrap").get<bool>();
            m.train_class_counts[0] = payload.at("train_class_counts")[0].get<std::int64_t>();
            m.train_class_counts[1] = payload.at("train_class_counts")[1].get<std::int64_t>();
            for (const auto& t : payload.at("trees"))
                m.trees.push_back(detail::tree_from_json(t));
            if (static_cast<int>(m.trees.size()) != m.params.n_trees)
                throw error(errc::corrupt_model, "tree count != n_trees");
            return m;
        }
        if (kind == classifier_kind::svm) {
            svm_model m;
            m.schema = std::move(schema);
            m.seed = seed;
            m.params.C = params.at("C").get<double>();
            m.params.kernel = detail::kernel_from_json(params.at("kernel"));
            m.params.tol = params.at("tol").get<double>();
            m.params.max_passes = params.at("max_passes").get<int>();
            m.support = payload.at("support").get<std::vector<feature_row>>();
            m.alpha_y = payload.at("alpha_y").get<std::vector<double>>();
            m.bias = payload.at("bias").get<double>();
            m.sc.mean = payload.at("scaler_mean").get<std::vector<double>>();
            m.sc.stddev = payload.at("scaler_std").get<std::vector<double>>();
            m.converged = payload.at("converged").get<bool>();
            m.sweeps = payload.at("sweeps").get<int>();
            if (m.support.size() != m.alpha_y.size() || m.support.empty())
                throw error(errc::corrupt_model, "support vector arrays disagree");
            return m;
        }
        gbm_model m;
        m.schema = std::move(schema);
        m.seed = seed;
        m.params.n_rounds = params.at("n_rounds").get<int>();
        m.params.learning_rate = params.at("learning_rate").get<double>();
        m.params.max_depth = params.at("max_depth").get<int>();
        m.initial_score = payload.at("initial_score").get<double>();
        m.train_losses = payload.at("train_losses").get<std::vector<double>>();
        for (const auto& t : payload.at("trees"))
            m.trees.push_back(detail::tree_from_json(t));
        if (static_cast<int>(m.trees.size()) != m.params.n_rounds)
            throw error(errc::corrupt_model, "tree count != n_rounds");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw error(errc::corrupt_model, std::string("bad model structure: ") + e.what());
    }
}

inline void save_model_file(const std::filesystem::path& path, const any_model& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw error(errc::io_failure, "cannot open " + path.string() + " for writing");
    const std::string text = save_model(m);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw error(errc::io_failure, "short write to " + path.string());
}

inline any_model load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error(errc::io_failure, "cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load_model(text);
}

} // namespace flfp
