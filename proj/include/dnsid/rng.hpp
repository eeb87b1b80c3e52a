#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace dnsid {

// Deterministic random source. The raw stream is mt19937_64 (whose output
// sequence is fixed by the standard); every distribution on top of it is
// implemented here rather than with std:: distributions, which are
// implementation-defined and would break cross-platform reproducibility.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n), n > 0. Rejection keeps it unbiased.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Exponential inter-arrival time with the given rate (mean 1/rate).
    double exponential(double rate) { return -std::log1p(-uniform01()) / rate; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
        }
    }

private:
    std::mt19937_64 engine_;
};

// Stable 64-bit seed derivation for independent substreams, e.g. one
// generator per (profile, day, boot). FNV-1a over the key bytes mixed with
// the base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view key) {
    std::uint64_t h = 0xcbf29ce484222325ull ^ base;
    for (unsigned char c : key) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace dnsid
