#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "flfp/classifier.hpp"
#include "flfp/cross_validation.hpp"
#include "flfp/error.hpp"
#include "flfp/synth.hpp"

namespace flfp {

/// Everything one invocation needs. Defaults reproduce the stock
/// experiment; a JSON config file can override any field and CLI flags
/// override the file.
struct run_config {
    std::uint64_t seed = 42;
    std::filesystem::path out = "out";

    corpus_spec corpus;
    double separation = 1.0;
    workload_profile cnn_profile = default_cnn_profile();
    workload_profile rnn_profile = default_rnn_profile();
    bool explicit_profiles = false; // config file supplied profiles verbatim
    noise_profile noise = default_noise_profile();

    int bins = 20;
    int top_k = 8;
    double window = 0.0; // 0 = whole-session features
    bool kl_per_packet = false;

    classifier_kind clf = classifier_kind::forest;
    int folds = 5;
    std::optional<std::vector<forest_params>> forest_grid;
    std::optional<std::vector<svm_params>> svm_grid;
    std::optional<std::vector<gbm_params>> gbm_grid;

    bool lenient = false; // reproduce: report threshold misses without failing

    /// Re-derives the separation-dependent defaults; keeps explicit
    /// profiles untouched.
    void apply_separation() {
        if (!explicit_profiles) {
            cnn_profile = default_cnn_profile(separation);
            rnn_profile = default_rnn_profile(separation);
        }
    }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<const char*> known,
                                const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw error(errc::config_error, "unknown key '" + key + "' in " + where);
    }
}

inline dist_spec dist_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) throw error(errc::config_error, where + " must be an object");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") {
        reject_unknown_keys(j, {"kind", "value"}, where);
        return dist_spec::constant(j.at("value").get<double>());
    }
    if (kind == "uniform") {
        reject_unknown_keys(j, {"kind", "lo", "hi"}, where);
        return dist_spec::uniform(j.at("lo").get<double>(), j.at("hi").get<double>());
    }
    if (kind == "truncated_normal") {
        reject_unknown_keys(j, {"kind", "mu", "sigma", "lo", "hi"}, where);
        return dist_spec::truncated_normal(j.at("mu").get<double>(), j.at("sigma").get<double>(),
                                           j.at("lo").get<double>(), j.at("hi").get<double>());
    }
    if (kind == "lognormal") {
        reject_unknown_keys(j, {"kind", "mu", "sigma"}, where);
        return dist_spec::lognormal(j.at("mu").get<double>(), j.at("sigma").get<double>());
    }
    throw error(errc::config_error, where + ": unknown distribution kind '" + kind + "'");
}

inline void profile_from_json(const nlohmann::json& j, workload_profile& p,
                              const std::string& where) {
    reject_unknown_keys(j,
                        {"rounds", "downlink_bytes", "uplink_bytes", "frame_payload",
                         "intra_burst_gap", "compute_gap", "session_frame_shift",
                         "session_timing_scale"},
                        where);
    if (j.contains("rounds")) p.rounds = j.at("rounds").get<int>();
    if (j.contains("downlink_bytes")) p.downlink_bytes = j.at("downlink_bytes").get<std::uint64_t>();
    if (j.contains("uplink_bytes")) p.uplink_bytes = j.at("uplink_bytes").get<std::uint64_t>();
    if (j.contains("frame_payload"))
        p.frame_payload = dist_from_json(j.at("frame_payload"), where + ".frame_payload");
    if (j.contains("intra_burst_gap"))
        p.intra_burst_gap = dist_from_json(j.at("intra_burst_gap"), where + ".intra_burst_gap");
    if (j.contains("compute_gap"))
        p.compute_gap = dist_from_json(j.at("compute_gap"), where + ".compute_gap");
    if (j.contains("session_frame_shift"))
        p.session_frame_shift =
            dist_from_json(j.at("session_frame_shift"), where + ".session_frame_shift");
    if (j.contains("session_timing_scale"))
        p.session_timing_scale =
            dist_from_json(j.at("session_timing_scale"), where + ".session_timing_scale");
}

inline kernel_spec kernel_from_config(const nlohmann::json& j, const std::string& where) {
    const std::string name = j.at("kernel").get<std::string>();
    if (name == "linear") {
        reject_unknown_keys(j, {"C", "kernel", "tol", "max_passes"}, where);
        return kernel_spec::linear();
    }
    if (name == "rbf") {
        reject_unknown_keys(j, {"C", "kernel", "gamma", "tol", "max_passes"}, where);
        return kernel_spec::rbf(j.at("gamma").get<double>());
    }
    throw error(errc::config_error, where + ": unknown kernel '" + name + "'");
}

} // namespace detail

/// Merges a JSON config file into cfg. Unknown keys anywhere are
/// rejected so typos fail loudly.
inline void apply_config_json(const nlohmann::json& doc, run_config& cfg) {
    using detail::reject_unknown_keys;
    reject_unknown_keys(doc,
                        {"seed", "out", "corpus", "separation", "profiles", "noise", "features",
                         "train"},
                        "config");

    if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("out")) cfg.out = doc.at("out").get<std::string>();
    if (doc.contains("separation")) {
        cfg.separation = doc.at("separation").get<double>();
        cfg.apply_separation();
    }

    if (doc.contains("corpus")) {
        const auto& c = doc.at("corpus");
        reject_unknown_keys(c,
                            {"train_cnn", "train_rnn", "test_cnn", "test_rnn", "noisy_fraction",
                             "server", "client"},
                            "config.corpus");
        if (c.contains("train_cnn")) cfg.corpus.train_cnn = c.at("train_cnn").get<int>();
        if (c.contains("train_rnn")) cfg.corpus.train_rnn = c.at("train_rnn").get<int>();
        if (c.contains("test_cnn")) cfg.corpus.test_cnn = c.at("test_cnn").get<int>();
        if (c.contains("test_rnn")) cfg.corpus.test_rnn = c.at("test_rnn").get<int>();
        cfg.corpus.rebalance_noisy(c.contains("noisy_fraction")
                                       ? c.at("noisy_fraction").get<double>()
                                       : 0.5);
        if (c.contains("server"))
            cfg.corpus.server = endpoint::parse(c.at("server").get<std::string>());
        if (c.contains("client"))
            cfg.corpus.client = endpoint::parse(c.at("client").get<std::string>());
    }

    if (doc.contains("profiles")) {
        const auto& p = doc.at("profiles");
        reject_unknown_keys(p, {"cnn", "rnn"}, "config.profiles");
        if (p.contains("cnn"))
            detail::profile_from_json(p.at("cnn"), cfg.cnn_profile, "config.profiles.cnn");
        if (p.contains("rnn"))
            detail::profile_from_json(p.at("rnn"), cfg.rnn_profile, "config.profiles.rnn");
        cfg.explicit_profiles = true;
    }

    if (doc.contains("noise")) {
        const auto& n = doc.at("noise");
        reject_unknown_keys(n, {"rate", "frame_size", "direction_bias"}, "config.noise");
        if (n.contains("rate")) cfg.noise.rate = n.at("rate").get<double>();
        if (n.contains("frame_size"))
            cfg.noise.frame_size = detail::dist_from_json(n.at("frame_size"), "config.noise.frame_size");
        if (n.contains("direction_bias"))
            cfg.noise.direction_bias = n.at("direction_bias").get<double>();
    }

    if (doc.contains("features")) {
        const auto& f = doc.at("features");
        reject_unknown_keys(f, {"bins", "k", "window", "kl_per_packet"}, "config.features");
        if (f.contains("bins")) cfg.bins = f.at("bins").get<int>();
        if (f.contains("k")) cfg.top_k = f.at("k").get<int>();
        if (f.contains("window")) cfg.window = f.at("window").get<double>();
        if (f.contains("kl_per_packet")) cfg.kl_per_packet = f.at("kl_per_packet").get<bool>();
    }

    if (doc.contains("train")) {
        const auto& t = doc.at("train");
        reject_unknown_keys(t, {"classifier", "folds", "forest_grid", "svm_grid", "gbm_grid"},
                            "config.train");
        if (t.contains("classifier"))
            cfg.clf = parse_classifier_kind(t.at("classifier").get<std::string>());
        if (t.contains("folds")) cfg.folds = t.at("folds").get<int>();
        if (t.contains("forest_grid")) {
            std::vector<forest_params> grid;
            for (const auto& g : t.at("forest_grid")) {
                reject_unknown_keys(
                    g, {"n_trees", "max_depth", "min_samples_split", "m_try", "bootstrap"},
                    "config.train.forest_grid[]");
                forest_params p;
                if (g.contains("n_trees")) p.n_trees = g.at("n_trees").get<int>();
                if (g.contains("max_depth")) p.max_depth = g.at("max_depth").get<int>();
                if (g.contains("min_samples_split"))
                    p.min_samples_split = g.at("min_samples_split").get<int>();
                if (g.contains("m_try")) p.m_try = g.at("m_try").get<int>();
                if (g.contains("bootstrap")) p.bootstrap = g.at("bootstrap").get<bool>();
                grid.push_back(p);
            }
            cfg.forest_grid = std::move(grid);
        }
        if (t.contains("svm_grid")) {
            std::vector<svm_params> grid;
            for (const auto& g : t.at("svm_grid")) {
                svm_params p;
                p.kernel = detail::kernel_from_config(g, "config.train.svm_grid[]");
                if (g.contains("C")) p.C = g.at("C").get<double>();
                if (g.contains("tol")) p.tol = g.at("tol").get<double>();
                if (g.contains("max_passes")) p.max_passes = g.at("max_passes").get<int>();
                grid.push_back(p);
            }
            cfg.svm_grid = std::move(grid);
        }
        if (t.contains("gbm_grid")) {
            std::vector<gbm_params> grid;
            for (const auto& g : t.at("gbm_grid")) {
                reject_unknown_keys(g, {"n_rounds", "learning_rate", "max_depth"},
                                    "config.train.gbm_grid[]");
                gbm_params p;
                if (g.contains("n_rounds")) p.n_rounds = g.at("n_rounds").get<int>();
                if (g.contains("learning_rate")) p.learning_rate = g.at("learning_rate").get<double>();
                if (g.contains("max_depth")) p.max_depth = g.at("max_depth").get<int>();
                grid.push_back(p);
            }
            cfg.gbm_grid = std::move(grid);
        }
    }
}

inline void load_config_file(const std::filesystem::path& path, run_config& cfg) {
    std::ifstream in(path);
    if (!in) throw error(errc::config_error, "cannot open config " + path.string());
    try {
        apply_config_json(nlohmann::json::parse(in), cfg);
    } catch (const nlohmann::json::exception& e) {
        throw error(errc::config_error, path.string() + ": " + e.what());
    }
}

} // namespace flfp
