#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "flfp/error.hpp"

namespace flfp {

// Uplink = client -> server.
enum class direction : std::int8_t { uplink, downlink };

inline int direction_sign(direction d) { return d == direction::uplink ? +1 : -1; }

enum class arch_label : std::uint8_t { cnn, rnn };

inline const char* to_string(arch_label l) { return l == arch_label::cnn ? "CNN" : "RNN"; }

inline arch_label parse_arch_label(std::string_view s) {
    if (s == "CNN" || s == "cnn") return arch_label::cnn;
    if (s == "RNN" || s == "rnn") return arch_label::rnn;
    throw error(errc::row_parse_error, "unknown label '" + std::string(s) + "'");
}

enum class capture_condition : std::uint8_t { ideal, noisy };

inline const char* to_string(capture_condition c) {
    return c == capture_condition::ideal ? "ideal" : "noisy";
}

inline capture_condition parse_condition(std::string_view s) {
    if (s == "ideal" || s == "Ideal") return capture_condition::ideal;
    if (s == "noisy" || s == "Noisy") return capture_condition::noisy;
    throw error(errc::row_parse_error, "unknown condition '" + std::string(s) + "'");
}

struct endpoint {
    std::array<std::uint8_t, 4> ip{0, 0, 0, 0};
    std::uint16_t port = 0;

    bool operator==(const endpoint&) const = default;

    std::string to_string() const {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%u.%u.%u.%u:%u", ip[0], ip[1], ip[2], ip[3], port);
        return buf;
    }

    /// Parses "a.b.c.d:port".
    static endpoint parse(std::string_view text) {
        unsigned a, b, c, d, p;
        char tail;
        std::string s(text);
        if (std::sscanf(s.c_str(), "%u.%u.%u.%u:%u%c", &a, &b, &c, &d, &p, &tail) != 5 ||
            a > 255 || b > 255 || c > 255 || d > 255 || p > 65535)
            throw error(errc::config_error, "bad endpoint '" + s + "'");
        return endpoint{{static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b),
                         static_cast<std::uint8_t>(c), static_cast<std::uint8_t>(d)},
                        static_cast<std::uint16_t>(p)};
    }
};

struct packet_record {
    double timestamp = 0.0;       // seconds since session start
    std::uint32_t frame_length = 0; // on-wire bytes
    direction dir = direction::uplink;

    bool operator==(const packet_record&) const = default;
};

/// One capture's worth of layer-3 metadata. Packets are kept sorted by
/// timestamp (non-decreasing); sessions are immutable once built.
struct trace_session {
    std::vector<packet_record> packets;
    std::optional<arch_label> label;
    capture_condition condition = capture_condition::ideal;
    std::string session_id;
};

struct capture_config {
    endpoint server;
    std::vector<endpoint> client_filter; // empty = accept any peer
    std::set<std::uint32_t> link_types{1, 101}; // Ethernet, raw IPv4
};

inline direction infer_direction(const endpoint& src, const endpoint& dst,
                                 const capture_config& cfg) {
    const bool src_is_server = (src == cfg.server);
    const bool dst_is_server = (dst == cfg.server);
    if (src_is_server == dst_is_server)
        throw error(errc::ambiguous_direction,
                    "src " + src.to_string() + " dst " + dst.to_string() + " vs server " +
                        cfg.server.to_string());
    return dst_is_server ? direction::uplink : direction::downlink;
}

/// Fixed-point decimal with >= 6 fractional digits, chosen so that
/// strtod() recovers the exact double (the CSV round-trip contract).
inline std::string format_time_exact(double t) {
    char buf[96];
    for (int prec : {6, 9, 12, 15, 17, 19, 21, 25, 30, 40}) {
        std::snprintf(buf, sizeof buf, "%.*f", prec, t);
        if (std::strtod(buf, nullptr) == t) return buf;
    }
    std::snprintf(buf, sizeof buf, "%.40f", t);
    return buf;
}

inline constexpr std::string_view kTraceCsvHeader =
    "timestamp_s,frame_len_bytes,direction,interarrival_s";

inline std::string write_csv(const trace_session& session) {
    if (session.packets.empty()) throw error(errc::empty_session, "cannot export empty session");
    std::vector<packet_record> sorted = session.packets;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const packet_record& a, const packet_record& b) {
                         return a.timestamp < b.timestamp;
                     });
    std::string out(kTraceCsvHeader);
    out += '\n';
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        out += format_time_exact(sorted[i].timestamp);
        out += ',';
        out += std::to_string(sorted[i].frame_length);
        out += ',';
        out += sorted[i].dir == direction::uplink ? "+1" : "-1";
        out += ',';
        if (i > 0) out += format_time_exact(sorted[i].timestamp - sorted[i - 1].timestamp);
        out += '\n';
    }
    return out;
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

inline std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

inline double parse_double_field(std::string_view field, std::size_t row, const char* what) {
    std::string s(field);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw error(errc::row_parse_error,
                    "row " + std::to_string(row) + ": bad " + what + " '" + s + "'");
    return v;
}

} // namespace detail

inline trace_session read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw error(errc::schema_mismatch, "missing header row");
    if (detail::strip_cr(line) != kTraceCsvHeader)
        throw error(errc::schema_mismatch,
                    "header '" + line + "' != '" + std::string(kTraceCsvHeader) + "'");

    trace_session session;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        std::string_view text = detail::strip_cr(line);
        if (text.empty()) continue;
        ++row;
        auto fields = detail::split_fields(text);
        if (fields.size() != 4)
            throw error(errc::row_parse_error,
                        "row " + std::to_string(row) + ": expected 4 fields, got " +
                            std::to_string(fields.size()));
        double ts = detail::parse_double_field(fields[0], row, "timestamp_s");
        if (!(ts >= 0.0))
            throw error(errc::row_parse_error,
                        "row " + std::to_string(row) + ": timestamp_s must be >= 0");
        double len = detail::parse_double_field(fields[1], row, "frame_len_bytes");
        if (len < 1.0 || len != std::floor(len) || len > 4294967295.0)
            throw error(errc::row_parse_error,
                        "row " + std::to_string(row) + ": frame_len_bytes must be an integer >= 1");
        direction dir;
        if (fields[2] == "+1")
            dir = direction::uplink;
        else if (fields[2] == "-1")
            dir = direction::downlink;
        else
            throw error(errc::row_parse_error,
                        "row " + std::to_string(row) + ": direction must be +1 or -1");
        // interarrival_s (fields[3]) is informational; recomputed downstream.
        session.packets.push_back({ts, static_cast<std::uint32_t>(len), dir});
    }
    if (session.packets.empty()) throw error(errc::empty_session, "no data rows");
    std::stable_sort(session.packets.begin(), session.packets.end(),
                     [](const packet_record& a, const packet_record& b) {
                         return a.timestamp < b.timestamp;
                     });
    return session;
}

inline trace_session read_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    return read_csv(in);
}

/// Splits a session into consecutive half-open time windows
/// [k*window, (k+1)*window) anchored at the first packet. Empty windows
/// are dropped; label/condition carry over; packet order is preserved.
inline std::vector<trace_session> segment_session(const trace_session& session, double window) {
    if (session.packets.empty()) throw error(errc::empty_session, "cannot segment empty session");
    if (!(window > 0.0)) throw error(errc::bad_range, "window must be > 0");

    const double t0 = session.packets.front().timestamp;
    std::vector<trace_session> segments;
    std::int64_t current = -1;
    for (const packet_record& p : session.packets) {
        auto k = static_cast<std::int64_t>((p.timestamp - t0) / window);
        // guard against FP rounding putting a packet just past its window
        while (k > 0 && p.timestamp - t0 < static_cast<double>(k) * window) --k;
        while (p.timestamp - t0 >= static_cast<double>(k + 1) * window) ++k;
        if (segments.empty() || k != current) {
            trace_session seg;
            seg.label = session.label;
            seg.condition = session.condition;
            seg.session_id = session.session_id + "#w" + std::to_string(k);
            segments.push_back(std::move(seg));
            current = k;
        }
        segments.back().packets.push_back(p);
    }
    return segments;
}

} // namespace flfp
