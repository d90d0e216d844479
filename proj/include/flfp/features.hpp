#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "flfp/error.hpp"
#include "flfp/trace.hpp"

namespace flfp {

/// The canonical 13-feature layout. Order is load-bearing: extraction,
/// training, and prediction all index into it.
inline constexpr std::array<std::string_view, 13> kFeatureNames = {
    "mean_frame", "std_frame", "min_frame", "max_frame", "peaks_frame",
    "mean_dir",   "uplink_prop", "downlink_prop",
    "mean_ia",    "std_ia",    "min_ia",    "max_ia",    "peaks_ia",
};

struct feature_schema {
    std::vector<std::string> names;

    static feature_schema full() {
        feature_schema s;
        s.names.assign(kFeatureNames.begin(), kFeatureNames.end());
        return s;
    }

    std::size_t arity() const { return names.size(); }

    std::size_t index_of(std::string_view name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return i;
        throw error(errc::arity_mismatch, "feature '" + std::string(name) + "' not in schema");
    }

    bool operator==(const feature_schema&) const = default;
};

using feature_row = std::vector<double>;

struct series_stats {
    double mean = 0.0;
    double stddev = 0.0; // population
    double min = 0.0;
    double max = 0.0;
};

inline series_stats compute_stats(std::span<const double> values) {
    series_stats s;
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
    double ss = 0.0;
    s.min = s.max = values[0];
    for (double v : values) {
        ss += (v - s.mean) * (v - s.mean);
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
    }
    s.stddev = std::sqrt(ss / values.size());
    return s;
}

/// Counts strict local maxima that clear mean + one population stddev
/// of their own series. Series shorter than 3 have no interior points.
inline std::size_t count_peaks(std::span<const double> series) {
    if (series.size() < 3) return 0;
    const series_stats st = compute_stats(series);
    const double threshold = st.mean + st.stddev;
    std::size_t peaks = 0;
    for (std::size_t i = 1; i + 1 < series.size(); ++i)
        if (series[i] > series[i - 1] && series[i] > series[i + 1] && series[i] > threshold)
            ++peaks;
    return peaks;
}

inline std::vector<double> interarrival_series(const trace_session& session) {
    if (session.packets.size() < 2)
        throw error(errc::min_packets_not_met,
                    "session '" + session.session_id + "' has " +
                        std::to_string(session.packets.size()) + " packet(s), need >= 2");
    std::vector<double> gaps(session.packets.size() - 1);
    for (std::size_t i = 1; i < session.packets.size(); ++i)
        gaps[i - 1] = session.packets[i].timestamp - session.packets[i - 1].timestamp;
    return gaps;
}

/// The 13 statistics over one session: frame-length stats, direction
/// stats, interarrival stats. Session duration is deliberately not a
/// feature.
inline feature_row extract_features(const trace_session& session) {
    const std::vector<double> gaps = interarrival_series(session); // checks >= 2 packets

    std::vector<double> frames(session.packets.size());
    std::size_t uplinks = 0;
    for (std::size_t i = 0; i < session.packets.size(); ++i) {
        frames[i] = session.packets[i].frame_length;
        if (session.packets[i].dir == direction::uplink) ++uplinks;
    }
    const series_stats fs = compute_stats(frames);
    const series_stats is = compute_stats(gaps);
    const auto n = static_cast<double>(session.packets.size());
    const double uplink_prop = static_cast<double>(uplinks) / n;
    const double downlink_prop = static_cast<double>(session.packets.size() - uplinks) / n;

    return {fs.mean,
            fs.stddev,
            fs.min,
            fs.max,
            static_cast<double>(count_peaks(frames)),
            2.0 * uplink_prop - 1.0,
            uplink_prop,
            downlink_prop,
            is.mean,
            is.stddev,
            is.min,
            is.max,
            static_cast<double>(count_peaks(gaps))};
}

struct labeled_dataset {
    std::vector<feature_row> rows;
    std::vector<arch_label> labels;
    feature_schema schema;
    std::vector<std::string> ids; // optional; same length as rows when present

    std::size_t size() const { return rows.size(); }
};

inline labeled_dataset build_dataset(const std::vector<trace_session>& sessions) {
    if (sessions.empty()) throw error(errc::empty_dataset, "no sessions");
    labeled_dataset ds;
    ds.schema = feature_schema::full();
    for (const trace_session& s : sessions) {
        if (!s.label)
            throw error(errc::unlabeled_session, "session '" + s.session_id + "' has no label");
        ds.rows.push_back(extract_features(s));
        ds.labels.push_back(*s.label);
        ds.ids.push_back(s.session_id);
    }
    return ds;
}

struct histogram {
    std::vector<double> edges; // B+1, strictly increasing
    std::vector<double> mass;  // B, sums to 1

    std::size_t bins() const { return mass.size(); }
};

/// Equal-width histogram over [lo, hi] with additive smoothing
/// p_b = (count_b + eps) / (n + B*eps); out-of-range values land in the
/// end bins. The smoothing keeps every KL term finite.
inline histogram estimate_histogram(std::span<const double> values, int bins, double lo,
                                    double hi) {
    if (bins < 1) throw error(errc::bad_range, "bins must be >= 1");
    if (!(lo < hi)) throw error(errc::bad_range, "need lo < hi");
    if (values.empty()) throw error(errc::empty_values, "no values to bin");

    constexpr double eps = 1e-9;
    const auto b = static_cast<std::size_t>(bins);
    const double width = (hi - lo) / bins;

    histogram h;
    h.edges.resize(b + 1);
    for (std::size_t i = 0; i <= b; ++i) h.edges[i] = lo + width * static_cast<double>(i);
    h.edges.back() = hi;

    std::vector<std::size_t> counts(b, 0);
    for (double v : values) {
        auto idx = static_cast<std::int64_t>((v - lo) / width);
        idx = std::clamp<std::int64_t>(idx, 0, static_cast<std::int64_t>(b) - 1);
        ++counts[static_cast<std::size_t>(idx)];
    }
    const double denom = static_cast<double>(values.size()) + static_cast<double>(bins) * eps;
    h.mass.resize(b);
    for (std::size_t i = 0; i < b; ++i)
        h.mass[i] = (static_cast<double>(counts[i]) + eps) / denom;
    return h;
}

/// KL(p || q) in nats over histograms with identical edges.
inline double kl_divergence(const histogram& p, const histogram& q) {
    if (p.edges != q.edges) throw error(errc::edge_mismatch, "histograms bin different ranges");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.mass.size(); ++i)
        if (p.mass[i] > 0.0) kl += p.mass[i] * std::log(p.mass[i] / q.mass[i]);
    if (kl < 0.0 && kl >= -1e-12) kl = 0.0;
    return kl;
}

namespace detail {

struct class_split {
    std::vector<double> a; // CNN
    std::vector<double> b; // RNN
};

inline class_split split_feature_by_class(const labeled_dataset& ds, std::size_t feature_index) {
    if (feature_index >= ds.schema.arity())
        throw error(errc::index_out_of_range,
                    "feature index " + std::to_string(feature_index) + " of " +
                        std::to_string(ds.schema.arity()));
    class_split out;
    for (std::size_t i = 0; i < ds.rows.size(); ++i)
        (ds.labels[i] == arch_label::cnn ? out.a : out.b).push_back(ds.rows[i][feature_index]);
    if (out.a.empty() || out.b.empty())
        throw error(errc::single_class_dataset, "need rows of both classes");
    return out;
}

} // namespace detail

/// Two-class Fisher score: squared mean gap over summed per-class
/// population variances. Both variances zero -> +inf when the means
/// differ, 0 otherwise.
inline double fisher_score(const labeled_dataset& ds, std::size_t feature_index) {
    const auto [a, b] = detail::split_feature_by_class(ds, feature_index);
    const series_stats sa = compute_stats(a);
    const series_stats sb = compute_stats(b);
    const double gap = sa.mean - sb.mean;
    const double denom = sa.stddev * sa.stddev + sb.stddev * sb.stddev;
    if (denom == 0.0)
        return gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return gap * gap / denom;
}

struct ranked_feature {
    std::string name;
    std::size_t schema_index = 0;
    double fisher = 0.0;
    double kl_ab = 0.0; // KL(CNN || RNN)
    double kl_ba = 0.0;
};

struct feature_ranking {
    std::vector<ranked_feature> entries; // fisher descending, ties by schema index
};

inline feature_ranking rank_features(const labeled_dataset& ds, int bins) {
    feature_ranking ranking;
    for (std::size_t f = 0; f < ds.schema.arity(); ++f) {
        const auto split = detail::split_feature_by_class(ds, f);
        ranked_feature r;
        r.name = ds.schema.names[f];
        r.schema_index = f;
        r.fisher = fisher_score(ds, f);

        double lo = std::min(*std::min_element(split.a.begin(), split.a.end()),
                             *std::min_element(split.b.begin(), split.b.end()));
        double hi = std::max(*std::max_element(split.a.begin(), split.a.end()),
                             *std::max_element(split.b.begin(), split.b.end()));
        if (lo == hi) { // constant feature; any shared span gives KL 0
            lo -= 0.5;
            hi += 0.5;
        }
        const histogram ha = estimate_histogram(split.a, bins, lo, hi);
        const histogram hb = estimate_histogram(split.b, bins, lo, hi);
        r.kl_ab = kl_divergence(ha, hb);
        r.kl_ba = kl_divergence(hb, ha);
        ranking.entries.push_back(std::move(r));
    }
    std::stable_sort(ranking.entries.begin(), ranking.entries.end(),
                     [](const ranked_feature& x, const ranked_feature& y) {
                         if (x.fisher != y.fisher) return x.fisher > y.fisher;
                         return x.schema_index < y.schema_index;
                     });
    return ranking;
}

/// Projects the dataset onto its top-k features by Fisher score; the
/// resulting schema lists the survivors in ranking order.
inline labeled_dataset select_features(const labeled_dataset& ds, std::size_t k, int bins) {
    if (k < 1 || k > ds.schema.arity())
        throw error(errc::index_out_of_range,
                    "k = " + std::to_string(k) + " outside [1, " +
                        std::to_string(ds.schema.arity()) + "]");
    const feature_ranking ranking = rank_features(ds, bins);

    labeled_dataset out;
    out.labels = ds.labels;
    out.ids = ds.ids;
    for (std::size_t i = 0; i < k; ++i)
        out.schema.names.push_back(ranking.entries[i].name);
    out.rows.reserve(ds.rows.size());
    for (const feature_row& row : ds.rows) {
        feature_row projected(k);
        for (std::size_t i = 0; i < k; ++i) projected[i] = row[ranking.entries[i].schema_index];
        out.rows.push_back(std::move(projected));
    }
    return out;
}

// ---- feature matrix CSV (schema names + trailing label column) ----

inline std::string format_value_exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string write_feature_csv(const labeled_dataset& ds) {
    std::string out;
    for (const std::string& name : ds.schema.names) {
        out += name;
        out += ',';
    }
    out += "label\n";
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        for (double v : ds.rows[i]) {
            out += format_value_exact(v);
            out += ',';
        }
        out += to_string(ds.labels[i]);
        out += '\n';
    }
    return out;
}

inline labeled_dataset read_feature_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw error(errc::schema_mismatch, "missing header row");
    auto header = detail::split_fields(detail::strip_cr(line));
    if (header.empty() || header.back() != "label")
        throw error(errc::schema_mismatch, "feature CSV must end with a label column");

    labeled_dataset ds;
    for (std::size_t i = 0; i + 1 < header.size(); ++i)
        ds.schema.names.emplace_back(header[i]);
    if (ds.schema.names.empty())
        throw error(errc::schema_mismatch, "feature CSV has no feature columns");

    std::size_t row = 0;
    while (std::getline(in, line)) {
        std::string_view text = detail::strip_cr(line);
        if (text.empty()) continue;
        ++row;
        auto fields = detail::split_fields(text);
        if (fields.size() != header.size())
            throw error(errc::row_parse_error,
                        "row " + std::to_string(row) + ": expected " +
                            std::to_string(header.size()) + " fields");
        feature_row values(ds.schema.arity());
        for (std::size_t i = 0; i < values.size(); ++i)
            values[i] = detail::parse_double_field(fields[i], row, ds.schema.names[i].c_str());
        ds.rows.push_back(std::move(values));
        ds.labels.push_back(parse_arch_label(fields.back()));
    }
    if (ds.rows.empty()) throw error(errc::empty_dataset, "feature CSV has no rows");
    return ds;
}

inline labeled_dataset read_feature_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    return read_feature_csv(in);
}

} // namespace flfp
