#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "flfp/error.hpp"
#include "flfp/pcap.hpp"
#include "flfp/rng.hpp"
#include "flfp/trace.hpp"

namespace flfp {

/// Sampling vocabulary for workload timing and sizing.
struct dist_spec {
    enum class kind : std::uint8_t { constant, uniform, truncated_normal, lognormal };
    kind type = kind::constant;
    double a = 0.0; // constant: value; uniform: lo; truncnorm/lognormal: mu
    double b = 0.0; // uniform: hi; truncnorm/lognormal: sigma
    double lo = 0.0; // truncnorm bounds
    double hi = 0.0;

    static dist_spec constant(double v) { return {kind::constant, v, 0, 0, 0}; }
    static dist_spec uniform(double lo, double hi) { return {kind::uniform, lo, hi, 0, 0}; }
    static dist_spec truncated_normal(double mu, double sigma, double lo, double hi) {
        return {kind::truncated_normal, mu, sigma, lo, hi};
    }
    static dist_spec lognormal(double mu, double sigma) {
        return {kind::lognormal, mu, sigma, 0, 0};
    }

    void validate(const char* what) const {
        switch (type) {
            case kind::constant:
                break;
            case kind::uniform:
                if (!(a <= b))
                    throw error(errc::degenerate_profile,
                                std::string(what) + ": uniform needs lo <= hi");
                break;
            case kind::truncated_normal:
                if (!(b >= 0.0) || !(lo < hi))
                    throw error(errc::degenerate_profile,
                                std::string(what) + ": truncated normal needs sigma >= 0, lo < hi");
                break;
            case kind::lognormal:
                if (!(b >= 0.0))
                    throw error(errc::degenerate_profile,
                                std::string(what) + ": lognormal needs sigma >= 0");
                break;
        }
    }
};

inline double sample(const dist_spec& d, rng& r) {
    switch (d.type) {
        case dist_spec::kind::constant:
            return d.a;
        case dist_spec::kind::uniform:
            return r.uniform(d.a, d.b);
        case dist_spec::kind::lognormal:
            return r.lognormal(d.a, d.b);
        case dist_spec::kind::truncated_normal: {
            for (int attempt = 0; attempt < 1000; ++attempt) {
                const double v = r.normal(d.a, d.b);
                if (v >= d.lo && v <= d.hi) return v;
            }
            throw error(errc::degenerate_profile,
                        "truncated normal produced no in-range sample in 1000 attempts");
        }
    }
    throw error(errc::degenerate_profile, "unknown distribution kind");
}

// On-wire framing constants: 14 (Ethernet) + 20 (IPv4) + 20 (TCP).
inline constexpr std::uint32_t kFrameOverhead = 54;
inline constexpr std::uint32_t kMinFrame = 55;   // at least 1 payload byte
inline constexpr std::uint32_t kMaxFrame = 1514; // Ethernet MTU
inline constexpr double kMinGap = 1e-6;          // pcap timestamp resolution

/// Traffic shape of one training workload. Per-round structure:
/// downlink burst (global model), compute gap (local epochs), uplink
/// burst (update). The session_* distributions are drawn once per
/// session and model run-to-run hyperparameter variation: a frame-size
/// offset in bytes and a multiplier on every gap.
struct workload_profile {
    arch_label label = arch_label::cnn;
    int rounds = 4;
    std::uint64_t downlink_bytes = 1;
    std::uint64_t uplink_bytes = 1;
    dist_spec frame_payload;        // payload bytes per frame
    dist_spec intra_burst_gap;      // seconds between frames of a burst
    dist_spec compute_gap;          // seconds between downlink and uplink bursts
    dist_spec session_frame_shift = dist_spec::constant(0.0);
    dist_spec session_timing_scale = dist_spec::constant(1.0);

    void validate() const {
        if (rounds < 1) throw error(errc::degenerate_profile, "rounds must be >= 1");
        if (downlink_bytes < 1 || uplink_bytes < 1)
            throw error(errc::degenerate_profile, "byte volumes must be >= 1");
        frame_payload.validate("frame_payload");
        intra_burst_gap.validate("intra_burst_gap");
        compute_gap.validate("compute_gap");
        session_frame_shift.validate("session_frame_shift");
        session_timing_scale.validate("session_timing_scale");
    }
};

struct noise_profile {
    double rate = 0.0;        // packets/second, Poisson
    dist_spec frame_size = dist_spec::constant(400.0); // on-wire bytes
    double direction_bias = 0.5; // P(uplink)

    void validate() const {
        if (rate < 0.0) throw error(errc::degenerate_profile, "noise rate must be >= 0");
        if (direction_bias < 0.0 || direction_bias > 1.0)
            throw error(errc::degenerate_profile, "direction_bias must be in [0,1]");
        frame_size.validate("noise frame_size");
    }
};

/// Deterministic session synthesis: identical (profile, seed) pairs
/// yield identical packet lists. Timestamps start at 0 and strictly
/// increase (every gap is clamped to at least 1 us).
inline trace_session generate_session(const workload_profile& profile, std::uint64_t seed) {
    profile.validate();
    rng r(seed);

    const double frame_shift = sample(profile.session_frame_shift, r);
    const double timing_scale = std::max(sample(profile.session_timing_scale, r), 1e-3);

    trace_session session;
    session.label = profile.label;
    session.condition = capture_condition::ideal;

    double t = 0.0;
    bool first_packet = true;
    auto gap = [&](const dist_spec& d) {
        return std::max(std::max(sample(d, r), 0.0) * timing_scale, kMinGap);
    };
    auto emit_burst = [&](std::uint64_t bytes, direction dir) {
        std::uint64_t remaining = bytes;
        while (remaining > 0) {
            if (!first_packet) t += gap(profile.intra_burst_gap);
            first_packet = false;
            const double raw = sample(profile.frame_payload, r) + frame_shift;
            auto payload = static_cast<std::uint64_t>(std::clamp(
                std::llround(raw), static_cast<long long>(1),
                static_cast<long long>(kMaxFrame - kFrameOverhead)));
            payload = std::min(payload, remaining);
            remaining -= payload;
            session.packets.push_back(
                {t, static_cast<std::uint32_t>(kFrameOverhead + payload), dir});
        }
    };

    for (int round = 0; round < profile.rounds; ++round) {
        emit_burst(profile.downlink_bytes, direction::downlink);
        t += gap(profile.compute_gap);
        emit_burst(profile.uplink_bytes, direction::uplink);
    }
    return session;
}

/// Superimposes a Poisson stream of browsing-style packets over the
/// session's time span and marks the session noisy. rate 0 changes
/// nothing but the condition tag.
inline trace_session inject_noise(const trace_session& session, const noise_profile& noise,
                                  std::uint64_t seed) {
    if (session.packets.empty()) throw error(errc::empty_session, "cannot add noise to nothing");
    noise.validate();

    trace_session out = session;
    out.condition = capture_condition::noisy;
    if (noise.rate == 0.0) return out;

    rng r(seed);
    const double t0 = session.packets.front().timestamp;
    const double t1 = session.packets.back().timestamp;
    const std::uint64_t count = r.poisson(noise.rate * (t1 - t0));
    for (std::uint64_t i = 0; i < count; ++i) {
        const double ts = r.uniform(t0, t1);
        const auto size = static_cast<std::uint32_t>(
            std::clamp(std::llround(sample(noise.frame_size, r)),
                       static_cast<long long>(kMinFrame), static_cast<long long>(kMaxFrame)));
        const direction dir =
            r.uniform01() < noise.direction_bias ? direction::uplink : direction::downlink;
        out.packets.push_back({ts, size, dir});
    }
    std::stable_sort(out.packets.begin(), out.packets.end(),
                     [](const packet_record& a, const packet_record& b) {
                         return a.timestamp < b.timestamp;
                     });
    return out;
}

// ---- corpus generation ----

struct corpus_spec {
    // session counts per (role, label); noisy counts out of each total
    int train_cnn = 8, train_rnn = 8;
    int test_cnn = 12, test_rnn = 11;
    int train_cnn_noisy = 4, train_rnn_noisy = 4;
    int test_cnn_noisy = 6, test_rnn_noisy = 5;
    std::uint64_t base_seed = 42;
    endpoint server = endpoint::parse("10.0.0.1:8080");
    endpoint client = endpoint::parse("10.0.0.2:5001");
    std::filesystem::path out_dir = "corpus";

    void validate() const {
        const int totals[4] = {train_cnn, train_rnn, test_cnn, test_rnn};
        const int noisy[4] = {train_cnn_noisy, train_rnn_noisy, test_cnn_noisy, test_rnn_noisy};
        for (int i = 0; i < 4; ++i) {
            if (totals[i] < 0) throw error(errc::config_error, "session counts must be >= 0");
            if (noisy[i] < 0 || noisy[i] > totals[i])
                throw error(errc::config_error, "noisy counts must be within [0, total]");
        }
    }

    /// Keeps the half-noisy default in step with overridden totals.
    void rebalance_noisy(double noisy_fraction) {
        if (noisy_fraction < 0.0 || noisy_fraction > 1.0)
            throw error(errc::config_error, "noisy_fraction must be in [0,1]");
        train_cnn_noisy = static_cast<int>(train_cnn * noisy_fraction);
        train_rnn_noisy = static_cast<int>(train_rnn * noisy_fraction);
        test_cnn_noisy = static_cast<int>(test_cnn * noisy_fraction);
        test_rnn_noisy = static_cast<int>(test_rnn * noisy_fraction);
    }
};

struct manifest_row {
    std::string path; // relative to the corpus directory
    std::string role; // train | test
    arch_label label;
    capture_condition condition;
    std::uint64_t seed;
};

struct corpus_manifest {
    std::vector<manifest_row> rows;
};

inline constexpr std::string_view kManifestHeader = "path,role,label,condition,seed";

inline void write_manifest_csv(const std::filesystem::path& path, const corpus_manifest& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw error(errc::io_failure, "cannot open " + path.string() + " for writing");
    out << kManifestHeader << '\n';
    for (const manifest_row& r : m.rows)
        out << r.path << ',' << r.role << ',' << to_string(r.label) << ','
            << to_string(r.condition) << ',' << r.seed << '\n';
    if (!out) throw error(errc::io_failure, "short write to " + path.string());
}

inline corpus_manifest read_manifest_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error(errc::io_failure, "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || detail::strip_cr(line) != kManifestHeader)
        throw error(errc::schema_mismatch, "bad manifest header in " + path.string());
    corpus_manifest m;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        std::string_view text = detail::strip_cr(line);
        if (text.empty()) continue;
        ++row;
        auto fields = detail::split_fields(text);
        if (fields.size() != 5)
            throw error(errc::row_parse_error, "manifest row " + std::to_string(row));
        manifest_row r;
        r.path = std::string(fields[0]);
        r.role = std::string(fields[1]);
        if (r.role != "train" && r.role != "test")
            throw error(errc::row_parse_error,
                        "manifest row " + std::to_string(row) + ": bad role '" + r.role + "'");
        r.label = parse_arch_label(fields[2]);
        r.condition = parse_condition(fields[3]);
        r.seed = std::strtoull(std::string(fields[4]).c_str(), nullptr, 10);
        m.rows.push_back(std::move(r));
    }
    return m;
}

/// Writes `<out>/{train,test}/<label>_<condition>_<index>.pcap` plus
/// manifest.csv. Session seeds derive from (base seed, role, ordinal),
/// so regeneration with the same spec is byte-identical.
inline corpus_manifest generate_corpus(const corpus_spec& spec, const workload_profile& cnn,
                                       const workload_profile& rnn, const noise_profile& noise) {
    spec.validate();
    cnn.validate();
    rnn.validate();
    noise.validate();

    namespace fs = std::filesystem;
    std::error_code ec;
    for (const char* role : {"train", "test"}) {
        fs::create_directories(spec.out_dir / role, ec);
        if (ec)
            throw error(errc::io_failure,
                        (spec.out_dir / role).string() + ": " + ec.message());
    }

    corpus_manifest manifest;
    const std::uint64_t role_ids[2] = {1, 2};
    const char* role_names[2] = {"train", "test"};
    for (int role = 0; role < 2; ++role) {
        std::uint64_t ordinal = 0;
        for (arch_label label : {arch_label::cnn, arch_label::rnn}) {
            const bool is_cnn = label == arch_label::cnn;
            const int total = role == 0 ? (is_cnn ? spec.train_cnn : spec.train_rnn)
                                        : (is_cnn ? spec.test_cnn : spec.test_rnn);
            const int noisy = role == 0 ? (is_cnn ? spec.train_cnn_noisy : spec.train_rnn_noisy)
                                        : (is_cnn ? spec.test_cnn_noisy : spec.test_rnn_noisy);
            const workload_profile& profile = is_cnn ? cnn : rnn;
            int index_by_condition[2] = {0, 0};
            for (int i = 0; i < total; ++i) {
                const bool is_noisy = i >= total - noisy;
                const std::uint64_t seed =
                    derive_seed(spec.base_seed, role_ids[role], ordinal++);
                trace_session session = generate_session(profile, seed);
                if (is_noisy) session = inject_noise(session, noise, derive_seed(seed, 0x4015e));

                const char* cond = to_string(session.condition);
                const std::string name = std::string(is_cnn ? "cnn" : "rnn") + "_" + cond + "_" +
                                         std::to_string(index_by_condition[is_noisy ? 1 : 0]++) +
                                         ".pcap";
                const std::string rel = std::string(role_names[role]) + "/" + name;
                session.session_id = name.substr(0, name.size() - 5);
                write_pcap_file(spec.out_dir / rel, session, spec.server, spec.client);
                manifest.rows.push_back(
                    {rel, role_names[role], label, session.condition, seed});
            }
        }
    }
    write_manifest_csv(spec.out_dir / "manifest.csv", manifest);
    return manifest;
}

// ---- default workload profiles ----

namespace detail {

inline double lerp(double from, double to, double s) { return from + (to - from) * s; }

} // namespace detail

/// Default CNN-like workload. At separation 1 the profile encodes the
/// two qualitative orderings the generator must reproduce: interarrival
/// variability well above the RNN profile's, frames larger on average.
/// Lower separation pulls every parameter toward the RNN-side baseline
/// until the classes merge at 0.
inline workload_profile default_cnn_profile(double separation = 1.0) {
    const double s = std::clamp(separation, 0.0, 1.0);
    workload_profile p;
    p.label = arch_label::cnn;
    p.rounds = 4;
    p.downlink_bytes = static_cast<std::uint64_t>(detail::lerp(65536, 262144, s));
    p.uplink_bytes = static_cast<std::uint64_t>(detail::lerp(32768, 131072, s));
    p.frame_payload = dist_spec::truncated_normal(detail::lerp(900.0, 1300.0, s),
                                                  detail::lerp(260.0, 90.0, s), 80.0, 1460.0);
    // heavy-tailed burst pacing: high interarrival variance. The log
    // sigma stays large at every separation so the lower tail reaches
    // line-rate gaps, as in real captures; mu is set from the target
    // mean, which is what must merge with the RNN profile at s=0.
    const double gap_mean = detail::lerp(0.0012, 0.0028, s);
    const double gap_sigma = detail::lerp(1.3, 1.1, s);
    p.intra_burst_gap =
        dist_spec::lognormal(std::log(gap_mean) - gap_sigma * gap_sigma / 2.0, gap_sigma);
    p.compute_gap = dist_spec::lognormal(std::log(detail::lerp(0.6, 3.8, s)),
                                         detail::lerp(0.05, 0.25, s));
    p.session_frame_shift = dist_spec::uniform(detail::lerp(-420.0, -130.0, s),
                                               detail::lerp(420.0, 130.0, s));
    p.session_timing_scale = dist_spec::uniform(detail::lerp(0.95, 0.90, s),
                                                detail::lerp(1.05, 1.30, s));
    return p;
}

/// Default RNN-like workload: dispersed frame sizes, tight metronomic
/// gaps, smaller per-round volumes. Independent of the separation knob;
/// the CNN profile moves toward this baseline as separation drops.
inline workload_profile default_rnn_profile(double /*separation*/ = 1.0) {
    workload_profile p;
    p.label = arch_label::rnn;
    p.rounds = 4;
    p.downlink_bytes = 65536;
    p.uplink_bytes = 32768;
    p.frame_payload = dist_spec::truncated_normal(900.0, 260.0, 80.0, 1460.0);
    // lower bound at line rate: the occasional back-to-back frame keeps
    // min_ia uninformative, as it is in real captures
    p.intra_burst_gap = dist_spec::truncated_normal(0.0012, 0.00055, 1e-6, 0.0024);
    p.compute_gap = dist_spec::truncated_normal(0.6, 0.04, 0.3, 0.9);
    p.session_frame_shift = dist_spec::uniform(-420.0, 420.0);
    p.session_timing_scale = dist_spec::uniform(0.95, 1.05);
    return p;
}

inline noise_profile default_noise_profile() {
    noise_profile n;
    n.rate = 0.7;
    n.frame_size = dist_spec::lognormal(std::log(400.0), 0.8);
    n.direction_bias = 0.4;
    return n;
}

} // namespace flfp
