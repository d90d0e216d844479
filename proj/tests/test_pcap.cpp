#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "flfp/pcap.hpp"
#include "flfp/synth.hpp"
#include "helpers.hpp"

using namespace flfp;

namespace {

std::vector<std::uint8_t> from_hex(std::string_view hex) {
    std::vector<std::uint8_t> out;
    for (std::size_t i = 0; i + 1 < hex.size(); i += 2)
        out.push_back(static_cast<std::uint8_t>(std::stoi(std::string(hex.substr(i, 2)), nullptr, 16)));
    return out;
}

// One 60-byte Ethernet/IPv4/TCP frame, 127.0.0.1:5001 -> 127.0.0.1:8080
// at t=3.141592, valid IPv4 checksum. Crafted and field-checked with an
// independent decoder before being frozen here.
constexpr std::string_view kMinimalPcapHex =
    "d4c3b2a1020004000000000000000000ffff0000010000000300000018290200"
    "3c0000003c00000002000000000102000000000208004500002e000000004006"
    "7cc87f0000017f00000113891f9000000000000000005010ffff000000000000"
    "00000000";

capture_config loopback_config() {
    capture_config cfg;
    cfg.server = endpoint::parse("127.0.0.1:8080");
    return cfg;
}

bool throws_code(errc expected, auto&& fn) {
    try {
        fn();
    } catch (const error& e) {
        return e.code() == expected;
    }
    return false;
}

} // namespace

TEST_CASE("minimal crafted capture parses to one uplink packet") {
    const auto bytes = from_hex(kMinimalPcapHex);
    const trace_session s = parse_pcap(bytes, loopback_config());
    REQUIRE(s.packets.size() == 1);
    CHECK(s.packets[0].frame_length == 60);
    CHECK(s.packets[0].dir == direction::uplink);
    CHECK(s.packets[0].timestamp == 0.0); // re-based to session start
}

TEST_CASE("UDP transport is accepted too") {
    auto bytes = from_hex(kMinimalPcapHex);
    bytes[24 + 16 + 14 + 9] = 17; // IPv4 protocol field -> UDP
    const trace_session s = parse_pcap(bytes, loopback_config());
    REQUIRE(s.packets.size() == 1);
    CHECK(s.packets[0].dir == direction::uplink);
}

TEST_CASE("other transports are skipped") {
    auto bytes = from_hex(kMinimalPcapHex);
    bytes[24 + 16 + 14 + 9] = 1; // ICMP
    CHECK(throws_code(errc::empty_session, [&] { parse_pcap(bytes, loopback_config()); }));
}

TEST_CASE("ARP-only capture yields EmptySession") {
    auto bytes = from_hex(kMinimalPcapHex);
    bytes[24 + 16 + 12] = 0x08; // ethertype 0x0806
    bytes[24 + 16 + 13] = 0x06;
    CHECK(throws_code(errc::empty_session, [&] { parse_pcap(bytes, loopback_config()); }));
}

TEST_CASE("malformed captures are rejected") {
    auto bytes = from_hex(kMinimalPcapHex);
    SECTION("bad magic") {
        bytes[0] = 0x00;
        CHECK(throws_code(errc::malformed_capture, [&] { parse_pcap(bytes, loopback_config()); }));
    }
    SECTION("truncated global header") {
        bytes.resize(20);
        CHECK(throws_code(errc::malformed_capture, [&] { parse_pcap(bytes, loopback_config()); }));
    }
    SECTION("truncated record header") {
        bytes.resize(24 + 10);
        CHECK(throws_code(errc::malformed_capture, [&] { parse_pcap(bytes, loopback_config()); }));
    }
    SECTION("truncated packet data") {
        bytes.resize(bytes.size() - 4);
        CHECK(throws_code(errc::malformed_capture, [&] { parse_pcap(bytes, loopback_config()); }));
    }
    SECTION("unsupported link type") {
        bytes[20] = 105; // 802.11
        CHECK(throws_code(errc::unsupported_link_type,
                          [&] { parse_pcap(bytes, loopback_config()); }));
    }
}

TEST_CASE("client filter keeps only listed peers") {
    const auto bytes = from_hex(kMinimalPcapHex);
    capture_config cfg = loopback_config();
    cfg.client_filter.push_back(endpoint::parse("127.0.0.1:5001"));
    CHECK(parse_pcap(bytes, cfg).packets.size() == 1);

    cfg.client_filter[0] = endpoint::parse("127.0.0.1:5002");
    CHECK(throws_code(errc::empty_session, [&] { parse_pcap(bytes, cfg); }));
}

TEST_CASE("out-of-order records come back sorted") {
    trace_session s;
    s.packets = {{0.0, 60, direction::uplink},
                 {2.0, 61, direction::downlink},
                 {1.0, 62, direction::uplink}};
    // write_pcap sorts on write; shuffle the file ordering by writing
    // two sessions' bytes by hand instead: swap the two record blocks
    const endpoint server = endpoint::parse("10.0.0.1:8080");
    const endpoint client = endpoint::parse("10.0.0.2:5001");
    auto bytes = write_pcap(s, server, client);
    // records start at 24; each is 16 + frame_length; write order is
    // sorted by timestamp, so lengths run 60, 62, 61
    const std::size_t r0 = 24, r1 = 24 + 16 + 60, r2 = r1 + 16 + 62;
    std::vector<std::uint8_t> swapped(bytes.begin(), bytes.begin() + 24);
    swapped.insert(swapped.end(), bytes.begin() + r2, bytes.end());            // t=2.0
    swapped.insert(swapped.end(), bytes.begin() + r1, bytes.begin() + r2);     // t=1.0
    swapped.insert(swapped.end(), bytes.begin() + r0, bytes.begin() + r1);     // t=0.0

    capture_config cfg;
    cfg.server = server;
    const trace_session parsed = parse_pcap(swapped, cfg);
    REQUIRE(parsed.packets.size() == 3);
    CHECK(parsed.packets[0].frame_length == 60);
    CHECK(parsed.packets[1].frame_length == 62);
    CHECK(parsed.packets[2].frame_length == 61);
    for (std::size_t i = 1; i < 3; ++i)
        CHECK(parsed.packets[i].timestamp >= parsed.packets[i - 1].timestamp);
}

TEST_CASE("write_pcap frame size boundaries") {
    const endpoint server = endpoint::parse("10.0.0.1:8080");
    const endpoint client = endpoint::parse("10.0.0.2:5001");
    trace_session s;
    s.packets = {{0.0, 54, direction::uplink}};
    CHECK(parse_pcap(write_pcap(s, server, client), capture_config{server, {}, {1, 101}})
              .packets[0]
              .frame_length == 54);

    s.packets = {{0.0, 53, direction::uplink}};
    CHECK(throws_code(errc::frame_too_small, [&] { write_pcap(s, server, client); }));
}

TEST_CASE("pcap round-trip reproduces packets within microsecond quantization") {
    const endpoint server = endpoint::parse("10.0.0.1:8080");
    const endpoint client = endpoint::parse("10.0.0.2:5001");
    capture_config cfg;
    cfg.server = server;
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const trace_session s = testgen::random_session(seed);
        const trace_session back = parse_pcap(write_pcap(s, server, client), cfg);
        REQUIRE(back.packets.size() == s.packets.size());
        const double t0 = s.packets.front().timestamp;
        for (std::size_t i = 0; i < s.packets.size(); ++i) {
            CHECK(back.packets[i].frame_length == s.packets[i].frame_length);
            CHECK(back.packets[i].dir == s.packets[i].dir);
            CHECK(std::fabs(back.packets[i].timestamp - (s.packets[i].timestamp - t0)) <= 1e-6);
        }
    }
}

TEST_CASE("parsed packets never exclude the server endpoint") {
    // a frame between two non-server endpoints is skipped silently
    auto bytes = from_hex(kMinimalPcapHex);
    bytes[24 + 16 + 14 + 19] = 9; // dst ip 127.0.0.9
    CHECK(throws_code(errc::empty_session, [&] { parse_pcap(bytes, loopback_config()); }));
}
