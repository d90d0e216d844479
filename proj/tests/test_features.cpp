#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "flfp/features.hpp"
#include "helpers.hpp"

using namespace flfp;

namespace {

trace_session uplink_session(std::initializer_list<double> times,
                             std::initializer_list<std::uint32_t> lengths) {
    trace_session s;
    s.session_id = "t";
    auto t = times.begin();
    auto l = lengths.begin();
    for (; t != times.end(); ++t, ++l) s.packets.push_back({*t, *l, direction::uplink});
    return s;
}

bool throws_code(errc expected, auto&& fn) {
    try {
        fn();
    } catch (const error& e) {
        return e.code() == expected;
    }
    return false;
}

// independent re-statement of the peak rule for cross-checking
std::size_t naive_peaks(const std::vector<double>& v) {
    if (v.size() < 3) return 0;
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double threshold = mean + std::sqrt(var / static_cast<double>(v.size()));
    std::size_t count = 0;
    for (std::size_t i = 1; i + 1 < v.size(); ++i)
        if (v[i] > v[i - 1] && v[i] > v[i + 1] && v[i] > threshold) ++count;
    return count;
}

std::size_t schema_pos(const feature_schema& s, std::string_view name) {
    return s.index_of(name);
}

} // namespace

TEST_CASE("interarrival series is consecutive timestamp differences") {
    CHECK(interarrival_series(uplink_session({0.0, 0.5, 1.5}, {60, 60, 60})) ==
          std::vector<double>{0.5, 1.0});
    CHECK(interarrival_series(uplink_session({3.0, 3.0}, {60, 60})) == std::vector<double>{0.0});
    CHECK(throws_code(errc::min_packets_not_met,
                      [] { interarrival_series(uplink_session({1.0}, {60})); }));
}

TEST_CASE("count_peaks applies the strict local-maximum rule") {
    // mean 2.2, population std 1.6, threshold 3.8: only the 5 qualifies
    CHECK(count_peaks(std::vector<double>{1, 3, 1, 5, 1}) == 1);
    CHECK(count_peaks(std::vector<double>{4, 4, 4, 4}) == 0);
    CHECK(count_peaks(std::vector<double>{1, 9}) == 0);
    CHECK(count_peaks(std::vector<double>{}) == 0);

    rng r(7);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> series(3 + r.uniform_int(40));
        for (double& v : series) v = r.uniform(-5.0, 5.0);
        CHECK(count_peaks(series) == naive_peaks(series));
    }
}

TEST_CASE("extract_features matches the hand-computed two-packet example") {
    const feature_row f = extract_features(uplink_session({0.0, 0.5}, {100, 300}));
    const feature_schema s = feature_schema::full();
    CHECK(f[schema_pos(s, "mean_frame")] == 200.0);
    CHECK(f[schema_pos(s, "std_frame")] == 100.0); // population
    CHECK(f[schema_pos(s, "min_frame")] == 100.0);
    CHECK(f[schema_pos(s, "max_frame")] == 300.0);
    CHECK(f[schema_pos(s, "peaks_frame")] == 0.0);
    CHECK(f[schema_pos(s, "mean_dir")] == 1.0);
    CHECK(f[schema_pos(s, "uplink_prop")] == 1.0);
    CHECK(f[schema_pos(s, "downlink_prop")] == 0.0);
    CHECK(f[schema_pos(s, "mean_ia")] == 0.5);
    CHECK(f[schema_pos(s, "std_ia")] == 0.0);
    CHECK(f[schema_pos(s, "min_ia")] == 0.5);
    CHECK(f[schema_pos(s, "max_ia")] == 0.5);
    CHECK(f[schema_pos(s, "peaks_ia")] == 0.0);
}

TEST_CASE("all-downlink session encodes direction -1") {
    trace_session s;
    s.packets = {{0.0, 60, direction::downlink}, {0.1, 60, direction::downlink}};
    const feature_row f = extract_features(s);
    const feature_schema schema = feature_schema::full();
    CHECK(f[schema_pos(schema, "mean_dir")] == -1.0);
    CHECK(f[schema_pos(schema, "uplink_prop")] == 0.0);
    CHECK(f[schema_pos(schema, "downlink_prop")] == 1.0);
}

TEST_CASE("constant traffic has zero dispersion") {
    const feature_row f = extract_features(uplink_session({0.0, 0.1, 0.2, 0.3}, {90, 90, 90, 90}));
    const feature_schema s = feature_schema::full();
    CHECK(f[schema_pos(s, "std_frame")] == 0.0);
    CHECK(f[schema_pos(s, "std_ia")] == Catch::Approx(0.0).margin(1e-15));
    CHECK(f[schema_pos(s, "peaks_frame")] == 0.0);
    CHECK(f[schema_pos(s, "peaks_ia")] == 0.0);
}

TEST_CASE("extracted vectors satisfy the feature invariants") {
    const feature_schema s = feature_schema::full();
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        const feature_row f = extract_features(testgen::random_session(seed));
        REQUIRE(f.size() == 13);
        CHECK(f[schema_pos(s, "min_frame")] <= f[schema_pos(s, "mean_frame")]);
        CHECK(f[schema_pos(s, "mean_frame")] <= f[schema_pos(s, "max_frame")]);
        CHECK(f[schema_pos(s, "min_ia")] <= f[schema_pos(s, "mean_ia")] + 1e-15);
        CHECK(f[schema_pos(s, "mean_ia")] <= f[schema_pos(s, "max_ia")] + 1e-15);
        CHECK(f[schema_pos(s, "std_frame")] >= 0.0);
        CHECK(f[schema_pos(s, "std_ia")] >= 0.0);
        CHECK(std::fabs(f[schema_pos(s, "uplink_prop")] + f[schema_pos(s, "downlink_prop")] - 1.0) <=
              1e-12);
        CHECK(std::fabs(f[schema_pos(s, "mean_dir")] -
                        (2.0 * f[schema_pos(s, "uplink_prop")] - 1.0)) <= 1e-12);
        CHECK(f[schema_pos(s, "peaks_frame")] >= 0.0);
        CHECK(f[schema_pos(s, "peaks_ia")] >= 0.0);
    }
}

TEST_CASE("feature extraction is invariant to a constant time shift") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const trace_session s = testgen::random_session(seed, 2, 60);
        trace_session shifted = s;
        for (packet_record& p : shifted.packets) p.timestamp += 1024.0;
        // power-of-two shift on timestamps well below 2^10 ulp effects:
        // differences are not exactly preserved in general, so compare
        // with a tight tolerance
        const feature_row a = extract_features(s);
        const feature_row b = extract_features(shifted);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(b[i] == Catch::Approx(a[i]).margin(1e-9).epsilon(1e-9));
    }
}

TEST_CASE("scaling interarrival gaps by c scales only the interarrival stats") {
    const feature_schema schema = feature_schema::full();
    const std::size_t ia_stats[4] = {schema_pos(schema, "mean_ia"), schema_pos(schema, "std_ia"),
                                     schema_pos(schema, "min_ia"), schema_pos(schema, "max_ia")};
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        const trace_session s = testgen::random_session(seed, 2, 60);
        for (double c : {2.0, 0.5, 8.0}) { // powers of two: exact arithmetic
            trace_session scaled = s;
            const double t0 = s.packets.front().timestamp;
            for (packet_record& p : scaled.packets) p.timestamp = (p.timestamp - t0) * c;
            const feature_row a = extract_features(s);
            const feature_row b = extract_features(scaled);
            for (std::size_t i = 0; i < a.size(); ++i) {
                bool is_ia_stat = false;
                for (std::size_t j : ia_stats) is_ia_stat |= (i == j);
                if (is_ia_stat)
                    CHECK(b[i] == c * a[i]);
                else
                    CHECK(b[i] == a[i]); // frame, direction, peak counts untouched
            }
        }
    }
}

TEST_CASE("build_dataset labels sixteen sessions") {
    std::vector<trace_session> sessions;
    for (std::uint64_t seed = 0; seed < 16; ++seed) {
        trace_session s = testgen::random_session(seed + 1);
        s.label = seed < 8 ? arch_label::cnn : arch_label::rnn;
        sessions.push_back(std::move(s));
    }
    const labeled_dataset ds = build_dataset(sessions);
    CHECK(ds.rows.size() == 16);
    CHECK(ds.labels.size() == 16);
    CHECK(ds.schema.arity() == 13);
    CHECK(ds.ids.size() == 16);
}

TEST_CASE("build_dataset rejects empty and unlabeled input") {
    CHECK(throws_code(errc::empty_dataset, [] { build_dataset({}); }));
    std::vector<trace_session> sessions{testgen::random_session(3)};
    sessions[0].session_id = "mystery";
    try {
        build_dataset(sessions);
        FAIL("expected UnlabeledSession");
    } catch (const error& e) {
        CHECK(e.code() == errc::unlabeled_session);
        CHECK(std::string(e.what()).find("mystery") != std::string::npos);
    }
}

TEST_CASE("estimate_histogram bins, clamps, and normalizes") {
    const histogram h = estimate_histogram(std::vector<double>{0, 1, 2, 3}, 2, 0.0, 4.0);
    CHECK(h.mass[0] == Catch::Approx(0.5).margin(1e-8));
    CHECK(h.mass[1] == Catch::Approx(0.5).margin(1e-8));

    const histogram all_hi = estimate_histogram(std::vector<double>{5, 5, 5}, 4, 0.0, 5.0);
    CHECK(all_hi.mass[3] == Catch::Approx(1.0).margin(1e-8));

    const histogram skew = estimate_histogram(std::vector<double>{1, 1, 1, 9}, 2, 0.0, 10.0);
    CHECK(skew.mass[0] == Catch::Approx(0.75).margin(1e-8));
    CHECK(skew.mass[1] == Catch::Approx(0.25).margin(1e-8));

    CHECK(throws_code(errc::bad_range,
                      [] { estimate_histogram(std::vector<double>{1}, 2, 3.0, 3.0); }));
    CHECK(throws_code(errc::empty_values,
                      [] { estimate_histogram(std::vector<double>{}, 2, 0.0, 1.0); }));

    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        rng r(seed);
        std::vector<double> values(1 + r.uniform_int(50));
        for (double& v : values) v = r.uniform(-3.0, 3.0);
        const histogram hh =
            estimate_histogram(values, 1 + static_cast<int>(r.uniform_int(30)), -3.0, 3.0);
        double total = 0;
        for (double m : hh.mass) {
            CHECK(m >= 0.0);
            total += m;
        }
        CHECK(total == Catch::Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("kl_divergence matches the hand-evaluated sum") {
    histogram p{{0.0, 1.0, 2.0}, {0.5, 0.5}};
    histogram q{{0.0, 1.0, 2.0}, {0.25, 0.75}};
    // 0.5 ln 2 + 0.5 ln(2/3)
    CHECK(kl_divergence(p, q) == Catch::Approx(0.1438).margin(1e-3));
    CHECK(kl_divergence(p, p) == 0.0);

    histogram other{{0.0, 2.0, 4.0}, {0.5, 0.5}};
    CHECK(throws_code(errc::edge_mismatch, [&] { kl_divergence(p, other); }));
}

TEST_CASE("kl_divergence is non-negative and zero on self") {
    rng r(11);
    for (int trial = 0; trial < 300; ++trial) {
        const int bins = 2 + static_cast<int>(r.uniform_int(20));
        std::vector<double> a(1 + r.uniform_int(40)), b(1 + r.uniform_int(40));
        for (double& v : a) v = r.uniform(0.0, 1.0);
        for (double& v : b) v = r.uniform(0.0, 1.0);
        const histogram hp = estimate_histogram(a, bins, 0.0, 1.0);
        const histogram hq = estimate_histogram(b, bins, 0.0, 1.0);
        CHECK(kl_divergence(hp, hq) >= 0.0);
        CHECK(kl_divergence(hp, hp) == 0.0);
    }
}

namespace {

labeled_dataset two_column_dataset(std::vector<double> a_values, std::vector<double> b_values) {
    labeled_dataset ds;
    ds.schema.names = {"x"};
    for (double v : a_values) {
        ds.rows.push_back({v});
        ds.labels.push_back(arch_label::cnn);
    }
    for (double v : b_values) {
        ds.rows.push_back({v});
        ds.labels.push_back(arch_label::rnn);
    }
    return ds;
}

} // namespace

TEST_CASE("fisher_score on {1,2,3} vs {7,8,9} is 27") {
    const labeled_dataset ds = two_column_dataset({1, 2, 3}, {7, 8, 9});
    CHECK(fisher_score(ds, 0) == Catch::Approx(27.0).margin(1e-9));
}

TEST_CASE("fisher_score degenerate variance cases") {
    CHECK(fisher_score(two_column_dataset({5, 5}, {5, 5}), 0) == 0.0);
    CHECK(fisher_score(two_column_dataset({0, 0}, {1, 1}), 0) ==
          std::numeric_limits<double>::infinity());
}

TEST_CASE("fisher_score errors") {
    labeled_dataset single;
    single.schema.names = {"x"};
    single.rows = {{1.0}, {2.0}};
    single.labels = {arch_label::cnn, arch_label::cnn};
    CHECK(throws_code(errc::single_class_dataset, [&] { fisher_score(single, 0); }));
    CHECK(throws_code(errc::index_out_of_range,
                      [] { fisher_score(two_column_dataset({1}, {2}), 3); }));
}

TEST_CASE("fisher_score is symmetric under label exchange") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        labeled_dataset ds = testgen::random_dataset(seed, 6, 3);
        labeled_dataset swapped = ds;
        for (arch_label& l : swapped.labels)
            l = l == arch_label::cnn ? arch_label::rnn : arch_label::cnn;
        for (std::size_t f = 0; f < ds.schema.arity(); ++f)
            CHECK(fisher_score(ds, f) == Catch::Approx(fisher_score(swapped, f)).epsilon(1e-12));
    }
}

TEST_CASE("rank_features puts the only informative feature first") {
    labeled_dataset ds;
    ds.schema.names = {"flat", "signal", "flat2"};
    for (int i = 0; i < 4; ++i) {
        ds.rows.push_back({1.0, i < 2 ? 0.0 : 10.0, 2.0});
        ds.labels.push_back(i < 2 ? arch_label::cnn : arch_label::rnn);
    }
    const feature_ranking ranking = rank_features(ds, 4);
    CHECK(ranking.entries[0].name == "signal");
    // the two flat features tie at zero; schema order breaks the tie
    CHECK(ranking.entries[1].name == "flat");
    CHECK(ranking.entries[2].name == "flat2");
}

TEST_CASE("rank_features matches a brute-force recomputation") {
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        const labeled_dataset ds = testgen::random_dataset(seed, 5, 6, 2.0);
        const feature_ranking ranking = rank_features(ds, 8);
        REQUIRE(ranking.entries.size() == 6);

        // independent: recompute scores and sort stably by (score desc, index)
        std::vector<std::pair<double, std::size_t>> expected;
        for (std::size_t f = 0; f < 6; ++f) expected.push_back({fisher_score(ds, f), f});
        std::stable_sort(expected.begin(), expected.end(), [](const auto& x, const auto& y) {
            if (x.first != y.first) return x.first > y.first;
            return x.second < y.second;
        });
        for (std::size_t i = 0; i < 6; ++i) {
            CHECK(ranking.entries[i].schema_index == expected[i].second);
            CHECK(ranking.entries[i].fisher == expected[i].first);
            CHECK(ranking.entries[i].kl_ab >= 0.0);
            CHECK(ranking.entries[i].kl_ba >= 0.0);
        }
    }
}

TEST_CASE("select_features projects onto the top-k columns") {
    const labeled_dataset ds = testgen::random_dataset(4, 5, 6, 2.0);
    const feature_ranking ranking = rank_features(ds, 8);

    SECTION("full selection is a permutation") {
        const labeled_dataset all = select_features(ds, 6, 8);
        CHECK(all.schema.arity() == 6);
        for (std::size_t i = 0; i < 6; ++i) {
            CHECK(all.schema.names[i] == ranking.entries[i].name);
            for (std::size_t row = 0; row < ds.rows.size(); ++row)
                CHECK(all.rows[row][i] == ds.rows[row][ranking.entries[i].schema_index]);
        }
    }
    SECTION("k = 1 keeps the single best column") {
        const labeled_dataset one = select_features(ds, 1, 8);
        CHECK(one.schema.arity() == 1);
        CHECK(one.schema.names[0] == ranking.entries[0].name);
        CHECK(one.rows.size() == ds.rows.size());
    }
    SECTION("k bounds") {
        CHECK(throws_code(errc::index_out_of_range, [&] { select_features(ds, 0, 8); }));
        CHECK(throws_code(errc::index_out_of_range, [&] { select_features(ds, 7, 8); }));
    }
}

TEST_CASE("feature CSV round-trips exactly") {
    const labeled_dataset ds = testgen::random_dataset(9, 7, 5);
    const labeled_dataset back = read_feature_csv(write_feature_csv(ds));
    CHECK(back.schema == ds.schema);
    CHECK(back.labels == ds.labels);
    REQUIRE(back.rows.size() == ds.rows.size());
    for (std::size_t i = 0; i < ds.rows.size(); ++i) CHECK(back.rows[i] == ds.rows[i]);

    CHECK(throws_code(errc::schema_mismatch,
                      [] { read_feature_csv(std::string_view("a,b\n1,2\n")); }));
}
