#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dnsid::capture {

// One outbound DNS query attributed to a device.
struct DnsEvent {
    std::string device_id; // source MAC (or opaque label)
    std::string qname;     // lowercase, no trailing dot
    double t = 0.0;        // seconds since epoch

    bool operator==(const DnsEvent&) const = default;
};

// One power-cycle experiment: the DHCP discover anchor plus every DNS query
// the device issued afterwards, in capture order.
struct BootTrace {
    std::string label;     // ground-truth device name
    std::string boot_id;   // unique per power cycle
    std::string device_id;
    double dhcp_t = 0.0;
    std::vector<DnsEvent> events; // sorted by t, all t > dhcp_t

    bool operator==(const BootTrace&) const = default;
};

struct RawFrame {
    double t = 0.0;
    std::vector<std::uint8_t> data; // link-layer payload
};

struct RawCapture {
    std::vector<RawFrame> frames; // timestamps non-decreasing
};

struct NoDhcpAnchor : std::runtime_error {
    explicit NoDhcpAnchor(const std::string& device_id)
        : std::runtime_error("no DHCP discover found for device " + device_id) {}
};

struct PcapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Per-parse counters. Malformed frames are skipped, never fatal.
struct ParseStats {
    std::size_t frames = 0;
    std::size_t malformed = 0; // truncated or undecodable at some layer
    std::size_t ignored = 0;   // well-formed but not a matching DHCP/DNS frame
};

namespace detail {

inline std::uint16_t be16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] << 8 | p[1]);
}

inline std::uint32_t be32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) << 24 | static_cast<std::uint32_t>(p[1]) << 16 |
           static_cast<std::uint32_t>(p[2]) << 8 | static_cast<std::uint32_t>(p[3]);
}

inline std::string format_mac(const std::uint8_t* p) {
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(17);
    for (int i = 0; i < 6; ++i) {
        if (i) out.push_back(':');
        out.push_back(hex[p[i] >> 4]);
        out.push_back(hex[p[i] & 0xf]);
    }
    return out;
}

inline char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c; }

// Decodes the QNAME starting at `offset` within the DNS message. Handles
// compression pointers (queries rarely use them, but the format allows it).
// Returns nullopt on any malformed encoding.
inline std::optional<std::string> parse_qname(const std::uint8_t* msg, std::size_t len,
                                              std::size_t offset, std::size_t* end_offset) {
    std::string name;
    std::size_t pos = offset;
    bool jumped = false;
    int jumps = 0;
    while (true) {
        if (pos >= len) return std::nullopt;
        std::uint8_t l = msg[pos];
        if ((l & 0xC0) == 0xC0) { // compression pointer
            if (pos + 1 >= len) return std::nullopt;
            if (++jumps > 16) return std::nullopt;
            std::size_t target = static_cast<std::size_t>(l & 0x3F) << 8 | msg[pos + 1];
            if (!jumped && end_offset) *end_offset = pos + 2;
            jumped = true;
            if (target >= len) return std::nullopt;
            pos = target;
            continue;
        }
        if (l & 0xC0) return std::nullopt; // 01/10 label types are reserved
        if (l == 0) {
            if (!jumped && end_offset) *end_offset = pos + 1;
            break;
        }
        if (pos + 1 + l > len) return std::nullopt;
        if (!name.empty()) name.push_back('.');
        if (name.size() + l > 255) return std::nullopt;
        for (std::size_t i = 0; i < l; ++i) name.push_back(ascii_lower(static_cast<char>(msg[pos + 1 + i])));
        pos += 1 + l;
    }
    return name;
}

struct UdpFrame {
    std::string src_mac;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    const std::uint8_t* payload = nullptr;
    std::size_t payload_len = 0;
};

// Ethernet -> IPv4 -> UDP. Returns nullopt when the frame is not an
// IPv4/UDP frame or is truncated; `malformed` distinguishes the two.
inline std::optional<UdpFrame> decode_udp(const std::vector<std::uint8_t>& data, bool* malformed) {
    *malformed = false;
    if (data.size() < 14) {
        *malformed = true;
        return std::nullopt;
    }
    std::uint16_t ethertype = be16(data.data() + 12);
    if (ethertype != 0x0800) return std::nullopt; // IPv4 only
    if (data.size() < 14 + 20) {
        *malformed = true;
        return std::nullopt;
    }
    const std::uint8_t* ip = data.data() + 14;
    if ((ip[0] >> 4) != 4) {
        *malformed = true;
        return std::nullopt;
    }
    std::size_t ihl = static_cast<std::size_t>(ip[0] & 0x0F) * 4;
    if (ihl < 20 || data.size() < 14 + ihl) {
        *malformed = true;
        return std::nullopt;
    }
    if (ip[9] != 17) return std::nullopt; // UDP only
    std::size_t udp_off = 14 + ihl;
    if (data.size() < udp_off + 8) {
        *malformed = true;
        return std::nullopt;
    }
    const std::uint8_t* udp = data.data() + udp_off;
    std::uint16_t udp_len = be16(udp + 4);
    if (udp_len < 8 || udp_off + udp_len > data.size()) {
        *malformed = true;
        return std::nullopt;
    }
    UdpFrame out;
    out.src_mac = format_mac(data.data() + 6);
    out.src_port = be16(udp);
    out.dst_port = be16(udp + 2);
    out.payload = udp + 8;
    out.payload_len = udp_len - 8;
    return out;
}

// BOOTP op==1 with DHCP option 53 == 1 (DHCPDISCOVER).
inline bool is_dhcp_discover(const std::uint8_t* p, std::size_t len) {
    // 236-byte BOOTP header, 4-byte magic cookie, then options
    if (len < 240) return false;
    if (p[0] != 1) return false;
    if (be32(p + 236) != 0x63825363) return false;
    std::size_t pos = 240;
    while (pos < len) {
        std::uint8_t opt = p[pos];
        if (opt == 255) break; // end option
        if (opt == 0) {        // pad
            ++pos;
            continue;
        }
        if (pos + 1 >= len) return false;
        std::uint8_t olen = p[pos + 1];
        if (pos + 2 + olen > len) return false;
        if (opt == 53 && olen == 1) return p[pos + 2] == 1;
        pos += 2 + olen;
    }
    return false;
}

// First question's QNAME of a DNS query message (QR bit 0), or nullopt.
inline std::optional<std::string> parse_dns_query(const std::uint8_t* p, std::size_t len) {
    if (len < 12) return std::nullopt;
    std::uint16_t flags = be16(p + 2);
    if (flags & 0x8000) return std::nullopt; // response
    std::uint16_t qdcount = be16(p + 4);
    if (qdcount == 0) return std::nullopt;
    std::size_t end = 0;
    auto name = parse_qname(p, len, 12, &end);
    if (!name || name->empty()) return std::nullopt;
    if (end + 4 > len) return std::nullopt; // QTYPE + QCLASS must be present
    return name;
}

} // namespace detail

// Locates the first DHCP discover sent by `device_id` (its source MAC) and
// collects every DNS query the device issued after it, in capture order.
// `label` and `boot_id` default to the device id when not supplied.
inline BootTrace parse_capture(const RawCapture& raw, const std::string& device_id,
                               const std::string& label = "", const std::string& boot_id = "",
                               ParseStats* stats = nullptr) {
    ParseStats local;
    ParseStats& st = stats ? *stats : local;

    double dhcp_t = 0.0;
    bool have_anchor = false;
    std::vector<DnsEvent> events;

    for (const RawFrame& frame : raw.frames) {
        ++st.frames;
        bool malformed = false;
        auto udp = detail::decode_udp(frame.data, &malformed);
        if (!udp) {
            if (malformed)
                ++st.malformed;
            else
                ++st.ignored;
            continue;
        }
        if (udp->src_mac != device_id) {
            ++st.ignored;
            continue;
        }
        if (!have_anchor) {
            if (udp->dst_port == 67 && detail::is_dhcp_discover(udp->payload, udp->payload_len)) {
                have_anchor = true;
                dhcp_t = frame.t;
            } else {
                ++st.ignored;
            }
            continue;
        }
        if (udp->dst_port != 53) {
            ++st.ignored;
            continue;
        }
        auto qname = detail::parse_dns_query(udp->payload, udp->payload_len);
        if (!qname) {
            ++st.malformed;
            continue;
        }
        if (frame.t > dhcp_t) {
            events.push_back(DnsEvent{device_id, std::move(*qname), frame.t});
        } else {
            ++st.ignored;
        }
    }
    if (!have_anchor) throw NoDhcpAnchor(device_id);

    BootTrace trace;
    trace.label = label.empty() ? device_id : label;
    trace.device_id = device_id;
    trace.dhcp_t = dhcp_t;
    trace.events = std::move(events);
    if (boot_id.empty()) {
        std::ostringstream os;
        os << device_id << '@' << dhcp_t;
        trace.boot_id = os.str();
    } else {
        trace.boot_id = boot_id;
    }
    return trace;
}

// Classic pcap reader: magic 0xa1b2c3d4 (usec) / 0xa1b23c4d (nsec), either
// endianness, linktype 1 (Ethernet) only.
inline RawCapture read_pcap(std::istream& in) {
    std::uint8_t gh[24];
    in.read(reinterpret_cast<char*>(gh), 24);
    if (in.gcount() != 24) throw PcapError("pcap: truncated global header");

    std::uint32_t magic_le = static_cast<std::uint32_t>(gh[0]) | static_cast<std::uint32_t>(gh[1]) << 8 |
                             static_cast<std::uint32_t>(gh[2]) << 16 | static_cast<std::uint32_t>(gh[3]) << 24;
    bool swapped; // file endianness != reader's little-endian view
    double frac_unit;
    switch (magic_le) {
    case 0xa1b2c3d4u: swapped = false; frac_unit = 1e-6; break;
    case 0xa1b23c4du: swapped = false; frac_unit = 1e-9; break;
    case 0xd4c3b2a1u: swapped = true; frac_unit = 1e-6; break;
    case 0x4d3cb2a1u: swapped = true; frac_unit = 1e-9; break;
    default: throw PcapError("pcap: bad magic");
    }
    auto u32 = [&](const std::uint8_t* p) -> std::uint32_t {
        if (swapped)
            return static_cast<std::uint32_t>(p[0]) << 24 | static_cast<std::uint32_t>(p[1]) << 16 |
                   static_cast<std::uint32_t>(p[2]) << 8 | static_cast<std::uint32_t>(p[3]);
        return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
               static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
    };
    std::uint32_t linktype = u32(gh + 20);
    if (linktype != 1) throw PcapError("pcap: unsupported linktype " + std::to_string(linktype));

    RawCapture cap;
    double last_t = -1.0;
    for (;;) {
        std::uint8_t rh[16];
        in.read(reinterpret_cast<char*>(rh), 16);
        if (in.gcount() == 0) break;
        if (in.gcount() != 16) throw PcapError("pcap: truncated record header");
        std::uint32_t ts_sec = u32(rh), ts_frac = u32(rh + 4), incl = u32(rh + 8);
        if (incl > (1u << 26)) throw PcapError("pcap: implausible record length");
        RawFrame frame;
        frame.t = static_cast<double>(ts_sec) + static_cast<double>(ts_frac) * frac_unit;
        frame.data.resize(incl);
        in.read(reinterpret_cast<char*>(frame.data.data()), incl);
        if (static_cast<std::uint32_t>(in.gcount()) != incl) throw PcapError("pcap: truncated record");
        if (frame.t < last_t) throw PcapError("pcap: timestamps not monotonic");
        last_t = frame.t;
        cap.frames.push_back(std::move(frame));
    }
    return cap;
}

inline RawCapture read_pcap_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PcapError("pcap: cannot open " + path);
    return read_pcap(in);
}

} // namespace dnsid::capture
