#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dnsid/capture.hpp"
#include "dnsid/dataset.hpp"
#include "dnsid/featurize.hpp"
#include "dnsid/rng.hpp"

namespace dnsid::synth {

struct BurstSld {
    std::string sld;
    int count = 0; // emitted at jittered times in the first 2 s of every boot

    bool operator==(const BurstSld&) const = default;
};

struct SteadySld {
    std::string sld;
    double rate = 0.0; // queries per second, independent Poisson stream

    bool operator==(const SteadySld&) const = default;
};

// Traffic model for one device: a deterministic boot burst plus Poisson
// steady-state queries over the first 60 s after the anchor.
struct DeviceProfile {
    std::string product;
    std::string manufacturer;
    std::vector<BurstSld> boot_burst;
    std::vector<SteadySld> steady;

    bool operator==(const DeviceProfile&) const = default;
};

struct Corpus {
    std::vector<DeviceProfile> profiles;
    int boots_per_day = 100;
    int days = 1;
    // 1-based day index from which every profile queries an alternate SLD
    // set (each name gains a "-alt" suffix); 0 disables drift.
    int drift_day = 0;

    bool operator==(const Corpus&) const = default;
};

constexpr double kBurstWindow = 2.0;   // seconds
constexpr double kSteadyHorizon = 60.0; // seconds, matches the largest sweep time delta
constexpr double kBootSpacing = 120.0; // §-style two-minute on/off cadence

inline dataset::ManufacturerMap manufacturer_map(const Corpus& corpus) {
    dataset::ManufacturerMap map;
    for (const auto& p : corpus.profiles) map[p.product] = p.manufacturer;
    return map;
}

namespace detail {

inline std::string slug(const std::string& name) {
    std::string out;
    for (char c : name) {
        if (c >= 'A' && c <= 'Z')
            out.push_back(static_cast<char>(c + 32));
        else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'))
            out.push_back(c);
        else if (!out.empty() && out.back() != '-')
            out.push_back('-');
    }
    while (!out.empty() && out.back() == '-') out.pop_back();
    return out;
}

inline std::string drifted(const std::string& sld) { return sld + "-alt"; }

} // namespace detail

// Deterministic given (corpus, seed): every (profile, day, boot) gets its
// own derived generator, so traces are reproducible regardless of how the
// work is scheduled.
inline std::vector<capture::BootTrace> generate(const Corpus& corpus, std::uint64_t seed) {
    std::vector<capture::BootTrace> traces;
    traces.reserve(static_cast<std::size_t>(corpus.profiles.size()) * corpus.boots_per_day * corpus.days);
    for (std::size_t pi = 0; pi < corpus.profiles.size(); ++pi) {
        const DeviceProfile& prof = corpus.profiles[pi];
        const std::string slug = detail::slug(prof.product);
        for (int day = 0; day < corpus.days; ++day) {
            const bool drift = corpus.drift_day > 0 && day + 1 >= corpus.drift_day;
            for (int boot = 0; boot < corpus.boots_per_day; ++boot) {
                std::ostringstream key;
                key << "p" << pi << ":d" << day << ":b" << boot;
                Rng rng(derive_seed(seed, key.str()));

                capture::BootTrace tr;
                tr.label = prof.product;
                tr.device_id = slug;
                {
                    std::ostringstream id;
                    id << slug << "-d" << day << "-b" << boot;
                    tr.boot_id = id.str();
                }
                tr.dhcp_t = static_cast<double>(day) * 86400.0 + static_cast<double>(boot + 1) * kBootSpacing;

                auto emit = [&](const std::string& sld, double offset) {
                    tr.events.push_back(capture::DnsEvent{tr.device_id, (drift ? detail::drifted(sld) : sld) + ".com",
                                                          tr.dhcp_t + offset});
                };
                for (const BurstSld& b : prof.boot_burst) {
                    for (int k = 0; k < b.count; ++k) emit(b.sld, kBurstWindow * (1.0 - rng.uniform01()));
                }
                for (const SteadySld& s : prof.steady) {
                    if (s.rate <= 0.0) continue;
                    double t = rng.exponential(s.rate);
                    while (t <= kSteadyHorizon) {
                        emit(s.sld, t);
                        t += rng.exponential(s.rate);
                    }
                }
                std::stable_sort(tr.events.begin(), tr.events.end(),
                                 [](const capture::DnsEvent& a, const capture::DnsEvent& b) { return a.t < b.t; });
                traces.push_back(std::move(tr));
            }
        }
    }
    return traces;
}

// Analytic expectation of featurize() over generated boots:
// bucket value = (burst counts inside the window + rate * t_delta) / t_delta
// summed over the SLDs hashing to that bucket.
inline featurize::FrequencyVector expected_frequency(const DeviceProfile& profile, featurize::HashResolution h,
                                                     featurize::TimeDelta t_delta) {
    featurize::FrequencyVector fv;
    fv.h = h.buckets;
    fv.values.assign(static_cast<std::size_t>(h.buckets), 0.0);
    const double td = t_delta.seconds;
    for (const BurstSld& b : profile.boot_burst) {
        // Bursts are uniform in (0, 2]; a window shorter than that catches
        // the proportional share in expectation.
        const double inside = td >= kBurstWindow ? static_cast<double>(b.count)
                                                 : static_cast<double>(b.count) * td / kBurstWindow;
        fv.values[static_cast<std::size_t>(featurize::bucket(b.sld, h))] += inside;
    }
    for (const SteadySld& s : profile.steady) {
        const double span = std::min(td, kSteadyHorizon);
        fv.values[static_cast<std::size_t>(featurize::bucket(s.sld, h))] += s.rate * span;
    }
    for (double& v : fv.values) v /= td;
    return fv;
}

// ---------------------------------------------------------------------------
// Corpus definition file: {"boots_per_day":N,"days":N,"drift_day":N,
// "profiles":[{"product":...,"manufacturer":...,"burst":[[sld,count],...],
// "steady":[[sld,rate],...]},...]}

inline nlohmann::json to_json(const Corpus& corpus) {
    nlohmann::json profiles = nlohmann::json::array();
    for (const auto& p : corpus.profiles) {
        nlohmann::json burst = nlohmann::json::array();
        for (const auto& b : p.boot_burst) burst.push_back({b.sld, b.count});
        nlohmann::json steady = nlohmann::json::array();
        for (const auto& s : p.steady) steady.push_back({s.sld, s.rate});
        profiles.push_back({{"product", p.product},
                            {"manufacturer", p.manufacturer},
                            {"burst", burst},
                            {"steady", steady}});
    }
    return nlohmann::json{{"boots_per_day", corpus.boots_per_day},
                          {"days", corpus.days},
                          {"drift_day", corpus.drift_day},
                          {"profiles", profiles}};
}

inline Corpus corpus_from_json(const nlohmann::json& j) {
    Corpus corpus;
    corpus.boots_per_day = j.value("boots_per_day", 100);
    corpus.days = j.value("days", 1);
    corpus.drift_day = j.value("drift_day", 0);
    for (const auto& pj : j.at("profiles")) {
        DeviceProfile p;
        p.product = pj.at("product").get<std::string>();
        p.manufacturer = pj.at("manufacturer").get<std::string>();
        for (const auto& b : pj.value("burst", nlohmann::json::array()))
            p.boot_burst.push_back(BurstSld{b.at(0).get<std::string>(), b.at(1).get<int>()});
        for (const auto& s : pj.value("steady", nlohmann::json::array()))
            p.steady.push_back(SteadySld{s.at(0).get<std::string>(), s.at(1).get<double>()});
        corpus.profiles.push_back(std::move(p));
    }
    return corpus;
}

inline Corpus load_corpus_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus file " + path);
    nlohmann::json j;
    in >> j;
    return corpus_from_json(j);
}

inline void save_corpus_file(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << to_json(corpus).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Reference corpora

// 30 products from 27 manufacturers, mirroring the reference device list:
// an Amazon trio and a TP-Link pair share their manufacturer's SLD set and
// rates (indistinguishable at product granularity by construction), three
// devices are nearly silent, and the rest have distinct SLD sets.
inline Corpus default_corpus() {
    Corpus corpus;
    corpus.boots_per_day = 100;
    corpus.days = 1;

    auto add = [&](const std::string& product, const std::string& manufacturer, std::vector<BurstSld> burst,
                   std::vector<SteadySld> steady) {
        corpus.profiles.push_back(DeviceProfile{product, manufacturer, std::move(burst), std::move(steady)});
    };

    // The device SLDs below occupy pairwise-distinct buckets under the
    // FNV-1a mod-32 reduction ("ntp-pool" is deliberately shared across
    // several profiles), so the corpus separability is governed by the
    // engineered profile structure rather than accidental collisions.

    // shared-SLD trio
    const std::vector<BurstSld> amazon_burst{{"amazon-device", 3}, {"amazon-cloud", 2}};
    const std::vector<SteadySld> amazon_steady{{"amazon-cloud", 0.50}, {"amazon-media", 0.30}, {"ntp-pool", 0.20}};
    add("Echo Spot", "Amazon", amazon_burst, amazon_steady);
    add("Echo Plus", "Amazon", amazon_burst, amazon_steady);
    add("Fire TV", "Amazon", amazon_burst, amazon_steady);

    // shared-SLD pair
    const std::vector<BurstSld> tplink_burst{{"tplink-cloud", 3}};
    const std::vector<SteadySld> tplink_steady{{"tplink-cloud", 0.45}, {"tplink-api", 0.25}};
    add("TP-Link Bulb", "TP-Link", tplink_burst, tplink_steady);
    add("TP-Link Plug", "TP-Link", tplink_burst, tplink_steady);

    // nearly-silent devices: no burst, rates well under 0.05 qps
    add("Smartlife Remote", "Smartlife", {}, {{"smartlife-io", 0.04}});
    add("Cosori Cooker", "Cosori", {}, {{"cosori-api", 0.03}});
    add("Gosund Bulb", "Gosund", {}, {{"gosund-iot", 0.04}});

    add("Google Home", "Google", {{"google-home", 3}}, {{"google-home", 0.80}, {"ntp-pool", 0.30}});
    add("Blink Cam", "Blink", {{"blinkapi", 2}}, {{"blinkapi", 0.35}});
    add("Bosiwo Cam", "Bosiwo", {{"bosiwocam", 3}}, {{"bosiwocam", 0.30}});
    add("Wansview Cam", "Wansview", {{"wansview-cloud", 2}}, {{"wansview-cloud", 0.40}, {"ntp-pool", 0.10}});
    add("Yi Cam", "Yi", {{"yi-devices", 3}}, {{"yi-devices", 0.55}});
    add("Anova Sousvide", "Anova", {{"anova-culinary", 2}}, {{"anova-culinary", 0.15}});
    add("Govee Strip", "Govee", {{"govee-cloud", 2}}, {{"govee-cloud", 0.55}});
    add("Honeywell T-stat", "Honeywell", {{"honeywellhome", 3}}, {{"honeywellhome", 0.20}, {"ntp-pool", 0.30}});
    add("Levoit Humidifier", "Levoit", {{"levoit-cloud", 2}}, {{"levoit-cloud", 0.35}});
    add("Magichome Strip", "Magichome", {{"magichome-wifi", 2}}, {{"magichome-wifi", 0.60}, {"ntp-pool", 0.15}});
    add("Meross Door Opener", "Meross", {{"meross-cloud", 3}}, {{"meross-cloud", 0.40}});
    add("Netatmo Weather", "Netatmo", {{"netatmocloud", 2}}, {{"netatmocloud", 0.45}});
    add("Smarter Coffee Machine", "Smarter", {{"smarter-app", 2}}, {{"smarter-app", 0.30}});
    add("Wemo Plug", "Wemo", {{"wemo-api", 3}}, {{"wemo-api", 0.50}, {"ntp-pool", 0.25}});
    add("Insteon", "Insteon", {{"insteon-hub", 2}}, {{"insteon-hub", 0.45}});
    add("Lightify", "Lightify", {{"lightify-api", 2}}, {{"lightify-api", 0.35}});
    add("Philips Hue", "Philips", {{"meethue", 3}}, {{"meethue", 0.55}, {"ntp-pool", 0.20}});
    add("Sengled", "Sengled", {{"sengled-api", 2}}, {{"sengled-api", 0.30}});
    add("Smartthings", "Smartthings", {{"smartthings-net", 3}}, {{"smartthings-net", 0.65}});
    add("SwitchBot", "SwitchBot", {{"switchbot-io", 2}}, {{"switchbot-io", 0.25}});
    add("Xiaomi", "Xiaomi", {{"miui-cloud", 3}}, {{"miui-cloud", 0.70}});
    add("Samsung TV", "Samsung", {{"samsungcloud", 3}}, {{"samsungcloud", 0.45}, {"ntp-pool", 0.35}});

    return corpus;
}

// Profiles that share one SLD family and differ only in query rates, so a
// classifier must integrate evidence over time: short windows give noisy
// frequency estimates and long ones converge.
inline Corpus rate_distinguished_corpus(int profile_count = 8) {
    Corpus corpus;
    corpus.boots_per_day = 100;
    corpus.days = 1;
    for (int i = 0; i < profile_count; ++i) {
        DeviceProfile p;
        p.product = "Rate Device " + std::string(1, static_cast<char>('A' + i));
        p.manufacturer = p.product;
        // complementary ladders: every profile has the same total rate, so
        // only the split between the two buckets identifies it
        const double up = 0.3 + 1.5 * static_cast<double>(i);
        const double down = 0.3 + 1.5 * static_cast<double>(profile_count - 1 - i);
        p.steady = {{"beacon-svc", up}, {"sync-svc", down}};
        corpus.profiles.push_back(std::move(p));
    }
    return corpus;
}

// Well-separated profiles for the multi-day stability runs: distinct SLD
// sets per device, moderate rates, optional drift via Corpus::drift_day.
inline Corpus stationary_corpus(int profile_count = 10) {
    Corpus corpus;
    corpus.boots_per_day = 20;
    corpus.days = 9;
    for (int i = 0; i < profile_count; ++i) {
        DeviceProfile p;
        p.product = "Stationary Device " + std::to_string(i);
        p.manufacturer = p.product;
        const std::string base = "stationary-" + std::to_string(i);
        p.boot_burst = {{base + "-boot", 2 + i % 3}};
        p.steady = {{base + "-cloud", 0.25 + 0.05 * static_cast<double>(i % 5)},
                    {base + "-sync", 0.15 + 0.04 * static_cast<double>(i % 3)}};
        corpus.profiles.push_back(std::move(p));
    }
    return corpus;
}

} // namespace dnsid::synth
