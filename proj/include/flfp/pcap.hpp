#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "flfp/error.hpp"
#include "flfp/trace.hpp"

namespace flfp {

// Classic pcap only: little-endian magic, microsecond timestamps.
inline constexpr std::uint32_t kPcapMagicLE = 0xa1b2c3d4u;
inline constexpr std::uint32_t kLinkEthernet = 1;
inline constexpr std::uint32_t kLinkRawIp = 101;

namespace detail {

inline std::uint16_t rd_u16le(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t rd_u32le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t rd_u16be(const std::uint8_t* p) {
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

inline void wr_u16le(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline void wr_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}
inline void wr_u16be(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
}
inline void wr_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

inline std::uint16_t ipv4_header_checksum(const std::uint8_t* hdr, std::size_t len) {
    std::uint32_t sum = 0;
    for (std::size_t i = 0; i + 1 < len; i += 2)
        sum += static_cast<std::uint32_t>((hdr[i] << 8) | hdr[i + 1]);
    while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
    return static_cast<std::uint16_t>(~sum);
}

} // namespace detail

/// Parses a classic pcap byte stream into a session of layer-3 packet
/// metadata. Keeps IPv4 TCP/UDP packets that touch the configured
/// server endpoint (and, when a client filter is set, a listed client);
/// everything else is skipped. Timestamps are re-based so the first
/// kept packet is at t=0.
inline trace_session parse_pcap(std::span<const std::uint8_t> raw, const capture_config& cfg) {
    using namespace detail;
    if (raw.size() < 24) throw error(errc::malformed_capture, "truncated global header");
    if (rd_u32le(raw.data()) != kPcapMagicLE)
        throw error(errc::malformed_capture, "bad magic");
    const std::uint32_t link_type = rd_u32le(raw.data() + 20);
    if (!cfg.link_types.contains(link_type))
        throw error(errc::unsupported_link_type, "link type " + std::to_string(link_type));

    trace_session session;
    std::size_t off = 24;
    while (off < raw.size()) {
        if (raw.size() - off < 16)
            throw error(errc::malformed_capture, "truncated packet record header");
        const std::uint32_t ts_sec = rd_u32le(raw.data() + off);
        const std::uint32_t ts_usec = rd_u32le(raw.data() + off + 4);
        const std::uint32_t incl_len = rd_u32le(raw.data() + off + 8);
        const std::uint32_t orig_len = rd_u32le(raw.data() + off + 12);
        off += 16;
        if (raw.size() - off < incl_len)
            throw error(errc::malformed_capture, "truncated packet data");
        const std::uint8_t* frame = raw.data() + off;
        off += incl_len;

        std::size_t ip_off = 0;
        if (link_type == kLinkEthernet) {
            if (incl_len < 14) continue;
            if (rd_u16be(frame + 12) != 0x0800) continue; // not IPv4
            ip_off = 14;
        }
        if (incl_len < ip_off + 20) continue;
        const std::uint8_t* ip = frame + ip_off;
        if ((ip[0] >> 4) != 4) continue;
        const std::size_t ihl = static_cast<std::size_t>(ip[0] & 0x0f) * 4;
        if (ihl < 20 || incl_len < ip_off + ihl + 4) continue;
        const std::uint8_t proto = ip[9];
        if (proto != 6 && proto != 17) continue; // TCP/UDP only

        endpoint src{{ip[12], ip[13], ip[14], ip[15]}, rd_u16be(ip + ihl)};
        endpoint dst{{ip[16], ip[17], ip[18], ip[19]}, rd_u16be(ip + ihl + 2)};
        const bool src_is_server = (src == cfg.server);
        const bool dst_is_server = (dst == cfg.server);
        if (src_is_server == dst_is_server) continue; // neither, or degenerate both
        if (!cfg.client_filter.empty()) {
            const endpoint& peer = src_is_server ? dst : src;
            if (std::find(cfg.client_filter.begin(), cfg.client_filter.end(), peer) ==
                cfg.client_filter.end())
                continue;
        }
        if (orig_len == 0) continue;

        session.packets.push_back({static_cast<double>(ts_sec) + ts_usec * 1e-6, orig_len,
                                   infer_direction(src, dst, cfg)});
    }
    if (session.packets.empty())
        throw error(errc::empty_session, "no packets matched the server endpoint");

    std::stable_sort(session.packets.begin(), session.packets.end(),
                     [](const packet_record& a, const packet_record& b) {
                         return a.timestamp < b.timestamp;
                     });
    const double t0 = session.packets.front().timestamp;
    for (packet_record& p : session.packets) p.timestamp -= t0;
    return session;
}

/// Serializes a session as a classic pcap with synthetic
/// Ethernet/IPv4/TCP framing. Uplink packets run client->server.
/// TCP sequence/ack fields are zero-filled; timestamps are quantized
/// to microseconds.
inline std::vector<std::uint8_t> write_pcap(const trace_session& session, const endpoint& server,
                                            const endpoint& client) {
    using namespace detail;
    if (session.packets.empty()) throw error(errc::empty_session, "cannot export empty session");

    static constexpr std::uint8_t kServerMac[6] = {0x02, 0x00, 0x00, 0x00, 0x00, 0x01};
    static constexpr std::uint8_t kClientMac[6] = {0x02, 0x00, 0x00, 0x00, 0x00, 0x02};

    std::vector<std::uint8_t> out;
    out.reserve(24 + session.packets.size() * (16 + 64));
    wr_u32le(out, kPcapMagicLE);
    wr_u16le(out, 2);  // version 2.4
    wr_u16le(out, 4);
    wr_u32le(out, 0);  // thiszone
    wr_u32le(out, 0);  // sigfigs
    wr_u32le(out, 65535);
    wr_u32le(out, kLinkEthernet);

    std::vector<packet_record> sorted = session.packets;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const packet_record& a, const packet_record& b) {
                         return a.timestamp < b.timestamp;
                     });

    for (const packet_record& p : sorted) {
        if (p.frame_length < 54)
            throw error(errc::frame_too_small,
                        std::to_string(p.frame_length) + " bytes cannot carry Ethernet/IPv4/TCP");
        if (p.frame_length > 14u + 65535u)
            throw error(errc::bad_range, "frame exceeds IPv4 total_length");

        const auto total_us = static_cast<std::uint64_t>(std::llround(p.timestamp * 1e6));
        wr_u32le(out, static_cast<std::uint32_t>(total_us / 1000000));
        wr_u32le(out, static_cast<std::uint32_t>(total_us % 1000000));
        wr_u32le(out, p.frame_length); // incl_len
        wr_u32le(out, p.frame_length); // orig_len

        const bool up = (p.dir == direction::uplink);
        const endpoint& src = up ? client : server;
        const endpoint& dst = up ? server : client;

        // Ethernet
        const std::uint8_t* dst_mac = up ? kServerMac : kClientMac;
        const std::uint8_t* src_mac = up ? kClientMac : kServerMac;
        out.insert(out.end(), dst_mac, dst_mac + 6);
        out.insert(out.end(), src_mac, src_mac + 6);
        wr_u16be(out, 0x0800);

        // IPv4
        const std::size_t ip_start = out.size();
        out.push_back(0x45); // version 4, ihl 5
        out.push_back(0x00);
        wr_u16be(out, static_cast<std::uint16_t>(p.frame_length - 14));
        wr_u16be(out, 0);    // identification
        wr_u16be(out, 0);    // flags/fragment
        out.push_back(64);   // ttl
        out.push_back(6);    // TCP
        wr_u16be(out, 0);    // checksum placeholder
        out.insert(out.end(), src.ip.begin(), src.ip.end());
        out.insert(out.end(), dst.ip.begin(), dst.ip.end());
        const std::uint16_t csum = ipv4_header_checksum(out.data() + ip_start, 20);
        out[ip_start + 10] = static_cast<std::uint8_t>(csum >> 8);
        out[ip_start + 11] = static_cast<std::uint8_t>(csum & 0xff);

        // TCP, sequence/ack zeroed
        wr_u16be(out, src.port);
        wr_u16be(out, dst.port);
        wr_u32be(out, 0);
        wr_u32be(out, 0);
        out.push_back(0x50); // data offset 5
        out.push_back(0x10); // ACK
        wr_u16be(out, 65535);
        wr_u16be(out, 0);    // checksum (not computed; nothing here reads it)
        wr_u16be(out, 0);    // urgent
        out.resize(out.size() + (p.frame_length - 54), 0); // zero payload
    }
    return out;
}

inline trace_session parse_pcap_file(const std::filesystem::path& path,
                                     const capture_config& cfg) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error(errc::io_failure, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    trace_session s = parse_pcap(bytes, cfg);
    s.session_id = path.stem().string();
    return s;
}

inline void write_pcap_file(const std::filesystem::path& path, const trace_session& session,
                            const endpoint& server, const endpoint& client) {
    const std::vector<std::uint8_t> bytes = write_pcap(session, server, client);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw error(errc::io_failure, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw error(errc::io_failure, "short write to " + path.string());
}

} // namespace flfp
