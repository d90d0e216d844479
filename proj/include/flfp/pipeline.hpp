#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flfp/config.hpp"
#include "flfp/cross_validation.hpp"
#include "flfp/eval.hpp"
#include "flfp/features.hpp"
#include "flfp/model_io.hpp"
#include "flfp/pcap.hpp"
#include "flfp/synth.hpp"
#include "flfp/trace.hpp"

namespace flfp::pipeline {

namespace fs = std::filesystem;

/// Fixed layout under the run's --out directory; no hidden state.
struct run_paths {
    fs::path out;

    fs::path corpus_dir() const { return out / "corpus"; }
    fs::path manifest() const { return corpus_dir() / "manifest.csv"; }
    fs::path features_dir() const { return out / "features"; }
    fs::path train_features() const { return features_dir() / "train_features.csv"; }
    fs::path test_features() const { return features_dir() / "test_features.csv"; }
    fs::path analysis_dir() const { return out / "analysis"; }
    fs::path ranking() const { return analysis_dir() / "ranking.txt"; }
    fs::path histograms() const { return analysis_dir() / "histograms.csv"; }
    fs::path models_dir() const { return out / "models"; }
    fs::path model(classifier_kind k) const {
        return models_dir() / (std::string(to_string(k)) + ".model.json");
    }
    fs::path cv_table(classifier_kind k) const {
        return models_dir() / (std::string(to_string(k)) + ".cv.json");
    }
    fs::path reports_dir() const { return out / "reports"; }
    fs::path report_txt(classifier_kind k) const {
        return reports_dir() / (std::string(to_string(k)) + ".report.txt");
    }
    fs::path report_json(classifier_kind k) const {
        return reports_dir() / (std::string(to_string(k)) + ".report.json");
    }
    fs::path summary_txt() const { return out / "summary.txt"; }
    fs::path summary_json() const { return out / "summary.json"; }
};

namespace detail {

inline void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw error(errc::io_failure, dir.string() + ": " + ec.message());
}

inline void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw error(errc::io_failure, "cannot open " + path.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw error(errc::io_failure, "short write to " + path.string());
}

inline std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error(errc::io_failure, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace detail

// ---------- synth ----------

inline corpus_manifest run_synth(const run_config& cfg) {
    corpus_spec spec = cfg.corpus;
    spec.base_seed = cfg.seed;
    spec.out_dir = run_paths{cfg.out}.corpus_dir();
    return generate_corpus(spec, cfg.cnn_profile, cfg.rnn_profile, cfg.noise);
}

// ---------- extract ----------

struct extract_result {
    labeled_dataset train;
    labeled_dataset test;
    std::vector<std::string> failures; // "path: reason" per unreadable capture
    std::size_t skipped_windows = 0;   // windows with < 2 packets
};

/// Parses every manifest capture, labels it from the manifest, and
/// extracts features (per whole session, or per window when
/// cfg.window > 0). Bad files are collected, not fatal.
inline extract_result run_extract(const run_config& cfg) {
    const run_paths paths{cfg.out};
    const corpus_manifest manifest = read_manifest_csv(paths.manifest());

    capture_config capture;
    capture.server = cfg.corpus.server;

    extract_result result;
    std::vector<trace_session> train_sessions, test_sessions;
    for (const manifest_row& row : manifest.rows) {
        try {
            trace_session session = parse_pcap_file(paths.corpus_dir() / row.path, capture);
            session.label = row.label;
            session.condition = row.condition;

            std::vector<trace_session> units;
            if (cfg.window > 0.0) {
                for (trace_session& w : segment_session(session, cfg.window)) {
                    if (w.packets.size() < 2) {
                        ++result.skipped_windows;
                        continue;
                    }
                    units.push_back(std::move(w));
                }
            } else {
                units.push_back(std::move(session));
            }
            auto& sink = row.role == "train" ? train_sessions : test_sessions;
            for (trace_session& u : units) sink.push_back(std::move(u));
        } catch (const error& e) {
            result.failures.push_back(row.path + ": " + e.what());
        }
    }

    detail::ensure_dir(paths.features_dir());
    if (!train_sessions.empty()) {
        result.train = build_dataset(train_sessions);
        detail::write_text_file(paths.train_features(), write_feature_csv(result.train));
    } else {
        result.train.schema = feature_schema::full();
        detail::write_text_file(paths.train_features(), write_feature_csv(result.train));
    }
    if (!test_sessions.empty()) {
        result.test = build_dataset(test_sessions);
        detail::write_text_file(paths.test_features(), write_feature_csv(result.test));
    } else {
        result.test.schema = feature_schema::full();
        detail::write_text_file(paths.test_features(), write_feature_csv(result.test));
    }
    return result;
}

// ---------- analyze ----------

struct analyze_result {
    feature_ranking ranking;
    // pooled per-packet divergences, only with cfg.kl_per_packet
    double frame_kl_ab = 0.0, frame_kl_ba = 0.0;
    double ia_kl_ab = 0.0, ia_kl_ba = 0.0;
};

inline std::string render_ranking(const feature_ranking& ranking) {
    std::string out = "name            fisher        kl_ab         kl_ba\n";
    char line[128];
    for (const ranked_feature& r : ranking.entries) {
        std::snprintf(line, sizeof line, "%-15s %-13.6g %-13.6g %-13.6g\n", r.name.c_str(),
                      r.fisher, r.kl_ab, r.kl_ba);
        out += line;
    }
    return out;
}

/// Ranks the training features and dumps per-feature class histograms
/// for external plotting. With kl_per_packet set, also pools raw
/// per-packet frame lengths and interarrival gaps across the training
/// corpus and reports their class divergences.
inline analyze_result run_analyze(const run_config& cfg) {
    const run_paths paths{cfg.out};
    const labeled_dataset train = read_feature_csv(detail::read_text_file(paths.train_features()));

    analyze_result result;
    result.ranking = rank_features(train, cfg.bins);

    detail::ensure_dir(paths.analysis_dir());
    std::string ranking_text = render_ranking(result.ranking);

    std::string hist_csv = "feature,class,bin_lo,bin_hi,mass\n";
    for (std::size_t f = 0; f < train.schema.arity(); ++f) {
        const auto split = flfp::detail::split_feature_by_class(train, f);
        double lo = std::min(*std::min_element(split.a.begin(), split.a.end()),
                             *std::min_element(split.b.begin(), split.b.end()));
        double hi = std::max(*std::max_element(split.a.begin(), split.a.end()),
                             *std::max_element(split.b.begin(), split.b.end()));
        if (lo == hi) {
            lo -= 0.5;
            hi += 0.5;
        }
        const histogram ha = estimate_histogram(split.a, cfg.bins, lo, hi);
        const histogram hb = estimate_histogram(split.b, cfg.bins, lo, hi);
        char line[160];
        for (std::size_t b = 0; b < ha.bins(); ++b) {
            std::snprintf(line, sizeof line, "%s,CNN,%.17g,%.17g,%.17g\n",
                          train.schema.names[f].c_str(), ha.edges[b], ha.edges[b + 1], ha.mass[b]);
            hist_csv += line;
            std::snprintf(line, sizeof line, "%s,RNN,%.17g,%.17g,%.17g\n",
                          train.schema.names[f].c_str(), hb.edges[b], hb.edges[b + 1], hb.mass[b]);
            hist_csv += line;
        }
    }

    if (cfg.kl_per_packet) {
        const corpus_manifest manifest = read_manifest_csv(paths.manifest());
        capture_config capture;
        capture.server = cfg.corpus.server;
        std::vector<double> frames[2], gaps[2];
        for (const manifest_row& row : manifest.rows) {
            if (row.role != "train") continue;
            const trace_session s = parse_pcap_file(paths.corpus_dir() / row.path, capture);
            const int c = row.label == arch_label::cnn ? 0 : 1;
            for (const packet_record& p : s.packets)
                frames[c].push_back(static_cast<double>(p.frame_length));
            for (double g : interarrival_series(s)) gaps[c].push_back(g);
        }
        auto pooled_kl = [&](std::vector<double>* values, double& ab, double& ba) {
            if (values[0].empty() || values[1].empty())
                throw error(errc::single_class_dataset, "pooled KL needs both classes");
            double lo = std::min(*std::min_element(values[0].begin(), values[0].end()),
                                 *std::min_element(values[1].begin(), values[1].end()));
            double hi = std::max(*std::max_element(values[0].begin(), values[0].end()),
                                 *std::max_element(values[1].begin(), values[1].end()));
            if (lo == hi) {
                lo -= 0.5;
                hi += 0.5;
            }
            const histogram ha = estimate_histogram(values[0], cfg.bins, lo, hi);
            const histogram hb = estimate_histogram(values[1], cfg.bins, lo, hi);
            ab = kl_divergence(ha, hb);
            ba = kl_divergence(hb, ha);
        };
        pooled_kl(frames, result.frame_kl_ab, result.frame_kl_ba);
        pooled_kl(gaps, result.ia_kl_ab, result.ia_kl_ba);
        char line[160];
        std::snprintf(line, sizeof line,
                      "\npooled per-packet divergences\nframe_len       kl_ab=%-12.6g kl_ba=%-12.6g\n"
                      "interarrival    kl_ab=%-12.6g kl_ba=%-12.6g\n",
                      result.frame_kl_ab, result.frame_kl_ba, result.ia_kl_ab, result.ia_kl_ba);
        ranking_text += line;
    }

    detail::write_text_file(paths.ranking(), ranking_text);
    detail::write_text_file(paths.histograms(), hist_csv);
    return result;
}

// ---------- train ----------

struct train_result {
    fs::path model_path;
    nlohmann::json cv_table;
    std::size_t chosen = 0;
};

/// Column projection by feature name; missing names are a schema
/// mismatch, reported as ArityMismatch.
inline labeled_dataset project_onto(const feature_schema& target, const labeled_dataset& ds) {
    std::vector<std::size_t> indices;
    indices.reserve(target.arity());
    for (const std::string& name : target.names) indices.push_back(ds.schema.index_of(name));
    labeled_dataset out;
    out.schema = target;
    out.labels = ds.labels;
    out.ids = ds.ids;
    out.rows.reserve(ds.rows.size());
    for (const feature_row& row : ds.rows) {
        feature_row projected(indices.size());
        for (std::size_t i = 0; i < indices.size(); ++i) projected[i] = row[indices[i]];
        out.rows.push_back(std::move(projected));
    }
    return out;
}

/// Feature selection, grid-search CV, final fit on the full training
/// set, and model + CV-table serialization.
inline train_result run_train(const run_config& cfg, classifier_kind kind) {
    const run_paths paths{cfg.out};
    const labeled_dataset full = read_feature_csv(detail::read_text_file(paths.train_features()));
    const labeled_dataset train =
        select_features(full, static_cast<std::size_t>(cfg.top_k), cfg.bins);

    detail::ensure_dir(paths.models_dir());
    train_result result;
    result.model_path = paths.model(kind);
    nlohmann::json table = nlohmann::json::array();

    const std::uint64_t cv_seed = derive_seed(cfg.seed, 0xc0de, static_cast<std::uint64_t>(kind));
    const std::uint64_t fit_seed = derive_seed(cfg.seed, 0xf17, static_cast<std::uint64_t>(kind));

    if (kind == classifier_kind::forest) {
        const auto grid = cfg.forest_grid.value_or(default_forest_grid());
        const cv_result cv = grid_search_cv<forest_params>(
            train, grid, cfg.folds, cv_seed,
            [](const labeled_dataset& fit, const forest_params& p, std::uint64_t seed) {
                return train_forest(fit, p, seed);
            });
        for (std::size_t g = 0; g < grid.size(); ++g)
            table.push_back({{"params", flfp::detail::params_to_json(grid[g])},
                             {"mean_accuracy", cv.mean_accuracy[g]}});
        forest_model model = train_forest(train, grid[cv.chosen], fit_seed);
        save_model_file(result.model_path, any_model{std::move(model)});
        result.chosen = cv.chosen;
    } else if (kind == classifier_kind::svm) {
        const auto grid = cfg.svm_grid.value_or(default_svm_grid());
        const cv_result cv = grid_search_cv<svm_params>(
            train, grid, cfg.folds, cv_seed,
            [](const labeled_dataset& fit, const svm_params& p, std::uint64_t) {
                return train_svm(fit, p);
            });
        for (std::size_t g = 0; g < grid.size(); ++g)
            table.push_back({{"params", flfp::detail::params_to_json(grid[g])},
                             {"mean_accuracy", cv.mean_accuracy[g]}});
        svm_model model = train_svm(train, grid[cv.chosen]);
        model.seed = cfg.seed;
        save_model_file(result.model_path, any_model{std::move(model)});
        result.chosen = cv.chosen;
    } else {
        const auto grid = cfg.gbm_grid.value_or(default_gbm_grid());
        const cv_result cv = grid_search_cv<gbm_params>(
            train, grid, cfg.folds, cv_seed,
            [](const labeled_dataset& fit, const gbm_params& p, std::uint64_t) {
                return train_gbm(fit, p);
            });
        for (std::size_t g = 0; g < grid.size(); ++g)
            table.push_back({{"params", flfp::detail::params_to_json(grid[g])},
                             {"mean_accuracy", cv.mean_accuracy[g]}});
        gbm_model model = train_gbm(train, grid[cv.chosen]);
        model.seed = cfg.seed;
        save_model_file(result.model_path, any_model{std::move(model)});
        result.chosen = cv.chosen;
    }

    result.cv_table = {{"grid", std::move(table)}, {"chosen", result.chosen}};
    detail::write_text_file(paths.cv_table(kind), result.cv_table.dump(2) + "\n");
    return result;
}

// ---------- evaluate ----------

inline evaluation_report run_evaluate(const run_config& cfg, classifier_kind kind) {
    const run_paths paths{cfg.out};
    const any_model model = load_model_file(paths.model(kind));
    const labeled_dataset test_full =
        read_feature_csv(detail::read_text_file(paths.test_features()));
    const labeled_dataset test = project_onto(model_schema(model), test_full);

    const evaluation_report report = evaluate(model, test);
    detail::ensure_dir(paths.reports_dir());
    detail::write_text_file(paths.report_txt(kind), render_report(to_string(kind), report));
    detail::write_text_file(paths.report_json(kind), report_to_json(report).dump(2) + "\n");
    return report;
}

// ---------- predict ----------

/// One capture -> "LABEL score" (the CLI contract).
inline prediction run_predict(const fs::path& model_path, const fs::path& pcap_path,
                              const endpoint& server) {
    const any_model model = load_model_file(model_path);
    capture_config capture;
    capture.server = server;
    const trace_session session = parse_pcap_file(pcap_path, capture);

    labeled_dataset one;
    one.schema = feature_schema::full();
    one.rows.push_back(extract_features(session));
    one.labels.push_back(arch_label::cnn); // placeholder; projection needs no labels
    const labeled_dataset projected = project_onto(model_schema(model), one);
    return predict(model, projected.rows[0]);
}

// ---------- reproduce ----------

struct reproduce_row {
    classifier_kind kind;
    evaluation_report report;
    std::int64_t errors = 0;
};

struct reproduce_summary {
    std::vector<reproduce_row> rows; // forest, svm, gbm
    bool thresholds_met = false;
    std::string table; // deterministic rendering
};

/// Whole pipeline at one seed: synth -> extract -> analyze -> train all
/// three classifiers -> evaluate. Thresholds: the forest must classify
/// the test corpus perfectly; svm and gbm may miss at most one session.
inline reproduce_summary run_reproduce(const run_config& cfg) {
    run_synth(cfg);
    const extract_result extracted = run_extract(cfg);
    if (!extracted.failures.empty())
        throw error(errc::io_failure,
                    "extract failed for " + std::to_string(extracted.failures.size()) +
                        " capture(s): " + extracted.failures.front());
    run_analyze(cfg);

    reproduce_summary summary;
    for (classifier_kind kind :
         {classifier_kind::forest, classifier_kind::svm, classifier_kind::gbm}) {
        run_train(cfg, kind);
        reproduce_row row;
        row.kind = kind;
        row.report = run_evaluate(cfg, kind);
        row.errors = row.report.cm.total() - row.report.cm.counts[0][0] -
                     row.report.cm.counts[1][1];
        summary.rows.push_back(std::move(row));
    }
    summary.thresholds_met = summary.rows[0].errors == 0 && summary.rows[1].errors <= 1 &&
                             summary.rows[2].errors <= 1;

    std::string table;
    char line[160];
    std::snprintf(line, sizeof line, "%-10s %-9s %-7s %-7s %-7s %-7s %-7s %-7s\n", "classifier",
                  "accuracy", "cnn_p", "cnn_r", "cnn_f1", "rnn_p", "rnn_r", "rnn_f1");
    table += line;
    nlohmann::json rows_json = nlohmann::json::array();
    for (const reproduce_row& row : summary.rows) {
        const auto& cnn = row.report.per_class[0];
        const auto& rnn = row.report.per_class[1];
        std::snprintf(line, sizeof line, "%-10s %-9s %-7.2f %-7.2f %-7.2f %-7.2f %-7.2f %-7.2f\n",
                      to_string(row.kind), flfp::detail::percent2(row.report.accuracy).c_str(),
                      cnn.precision, cnn.recall, cnn.f1, rnn.precision, rnn.recall, rnn.f1);
        table += line;
        nlohmann::json j = report_to_json(row.report);
        j["classifier"] = to_string(row.kind);
        j["test_errors"] = row.errors;
        rows_json.push_back(std::move(j));
    }
    summary.table = table;

    const run_paths paths{cfg.out};
    detail::write_text_file(paths.summary_txt(), table);
    nlohmann::json doc{{"seed", cfg.seed},
                       {"separation", cfg.separation},
                       {"thresholds_met", summary.thresholds_met},
                       {"classifiers", std::move(rows_json)}};
    detail::write_text_file(paths.summary_json(), doc.dump(2) + "\n");
    return summary;
}

} // namespace flfp::pipeline
