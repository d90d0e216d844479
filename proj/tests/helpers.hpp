#pragma once

// Shared generators for property-style tests. Everything is seeded,
// so failures replay exactly.

#include <cstdint>
#include <vector>

#include "flfp/features.hpp"
#include "flfp/rng.hpp"
#include "flfp/trace.hpp"

namespace testgen {

/// Random valid session: sorted timestamps, frame lengths in
/// [55, 1514], mixed directions.
inline flfp::trace_session random_session(std::uint64_t seed, std::size_t min_packets = 2,
                                          std::size_t max_packets = 400) {
    flfp::rng r(seed);
    flfp::trace_session s;
    s.session_id = "gen" + std::to_string(seed);
    const std::size_t n = min_packets + r.uniform_int(max_packets - min_packets + 1);
    double t = r.uniform(0.0, 2.0);
    for (std::size_t i = 0; i < n; ++i) {
        flfp::packet_record p;
        p.timestamp = t;
        p.frame_length = static_cast<std::uint32_t>(55 + r.uniform_int(1460));
        p.dir = r.uniform01() < 0.5 ? flfp::direction::uplink : flfp::direction::downlink;
        s.packets.push_back(p);
        t += r.uniform(0.0, 0.05);
    }
    return s;
}

/// Random two-class dataset with d features; class means get a fixed
/// offset so both labels appear.
inline flfp::labeled_dataset random_dataset(std::uint64_t seed, std::size_t rows_per_class = 8,
                                            std::size_t d = 4, double class_gap = 1.0) {
    flfp::rng r(seed);
    flfp::labeled_dataset ds;
    for (std::size_t f = 0; f < d; ++f) ds.schema.names.push_back("f" + std::to_string(f));
    for (int c = 0; c < 2; ++c) {
        for (std::size_t i = 0; i < rows_per_class; ++i) {
            flfp::feature_row row(d);
            for (std::size_t f = 0; f < d; ++f)
                row[f] = r.normal(c == 0 ? 0.0 : class_gap, 1.0);
            ds.rows.push_back(std::move(row));
            ds.labels.push_back(c == 0 ? flfp::arch_label::cnn : flfp::arch_label::rnn);
        }
    }
    return ds;
}

} // namespace testgen
