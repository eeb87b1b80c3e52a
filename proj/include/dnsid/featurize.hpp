#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dnsid/capture.hpp"

namespace dnsid::featurize {

struct EmptyName : std::runtime_error {
    EmptyName() : std::runtime_error("empty query name") {}
};

// Number of hash buckets; the model's input dimension. The sweep uses
// {4, 8, 16, 32, 64} but any positive count is accepted.
struct HashResolution {
    int buckets;
    explicit HashResolution(int b) : buckets(b) {
        if (b < 1) throw std::invalid_argument("hash resolution must be >= 1");
    }
};

// Seconds of traffic after the anchor used for featurization.
struct TimeDelta {
    double seconds;
    explicit TimeDelta(double s) : seconds(s) {
        if (!(s > 0)) throw std::invalid_argument("time delta must be > 0");
    }
};

// Per-bucket average queries per second over the window.
struct FrequencyVector {
    int h = 0;
    std::vector<double> values; // length h, entries >= 0

    bool operator==(const FrequencyVector&) const = default;
};

// FNV-1a 64-bit. Chosen over a runtime-provided string hash so bucket
// assignment is identical across runs, platforms and languages.
constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

static_assert(fnv1a64("") == 14695981039346656037ull);

// Second label from the right ("google" in "time1.google.com"); a
// single-label name is returned as is. No public-suffix handling, so
// "a.b.co.uk" yields "co".
inline std::string extract_sld(std::string_view qname) {
    if (qname.empty()) throw EmptyName();
    auto last = qname.rfind('.');
    if (last == std::string_view::npos) return std::string(qname);
    auto prev = qname.rfind('.', last - 1);
    std::size_t begin = (prev == std::string_view::npos) ? 0 : prev + 1;
    return std::string(qname.substr(begin, last - begin));
}

inline int bucket(std::string_view sld, HashResolution h) {
    if (sld.empty()) throw EmptyName();
    return static_cast<int>(fnv1a64(sld) % static_cast<std::uint64_t>(h.buckets));
}

// Events with dhcp_t < t <= dhcp_t + t_delta, order preserved.
inline std::vector<capture::DnsEvent> window(const capture::BootTrace& trace, TimeDelta t_delta) {
    std::vector<capture::DnsEvent> out;
    const double hi = trace.dhcp_t + t_delta.seconds;
    for (const auto& e : trace.events) {
        if (e.t > trace.dhcp_t && e.t <= hi) out.push_back(e);
    }
    return out;
}

// values[b] = (windowed events whose SLD hashes to b) / t_delta. Every
// occurrence counts; retransmissions are signal, not noise.
inline FrequencyVector featurize(const capture::BootTrace& trace, HashResolution h, TimeDelta t_delta) {
    FrequencyVector fv;
    fv.h = h.buckets;
    fv.values.assign(static_cast<std::size_t>(h.buckets), 0.0);
    const double hi = trace.dhcp_t + t_delta.seconds;
    for (const auto& e : trace.events) {
        if (!(e.t > trace.dhcp_t && e.t <= hi)) continue;
        fv.values[static_cast<std::size_t>(bucket(extract_sld(e.qname), h))] += 1.0;
    }
    for (double& v : fv.values) v /= t_delta.seconds;
    return fv;
}

} // namespace dnsid::featurize
