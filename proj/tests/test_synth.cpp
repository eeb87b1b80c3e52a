#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "dnsid/featurize.hpp"
#include "dnsid/synth.hpp"

using namespace dnsid;
using Catch::Approx;

TEST_CASE("generate: deterministic for a fixed corpus and seed") {
    synth::Corpus corpus = synth::default_corpus();
    corpus.boots_per_day = 3;
    auto a = synth::generate(corpus, 7);
    auto b = synth::generate(corpus, 7);
    CHECK(a == b);
    auto c = synth::generate(corpus, 8);
    CHECK(a != c);
}

TEST_CASE("generate: boot burst lands fully inside (0, 2] on every boot") {
    synth::Corpus corpus;
    corpus.boots_per_day = 50;
    corpus.profiles.push_back(synth::DeviceProfile{"Bursty", "Bursty", {{"cloud-a", 3}}, {}});
    auto traces = synth::generate(corpus, 11);
    REQUIRE(traces.size() == 50);
    for (const auto& tr : traces) {
        REQUIRE(tr.events.size() == 3);
        for (const auto& e : tr.events) {
            CHECK(e.qname == "cloud-a.com");
            CHECK(e.t > tr.dhcp_t);
            CHECK(e.t <= tr.dhcp_t + 2.0);
        }
    }
}

TEST_CASE("generate: steady stream matches its Poisson mean over 1000 boots") {
    synth::Corpus corpus;
    corpus.boots_per_day = 1000;
    corpus.profiles.push_back(synth::DeviceProfile{"Steady", "Steady", {}, {{"svc", 0.5}}});
    auto traces = synth::generate(corpus, 3);
    double total = 0.0;
    for (const auto& tr : traces) total += static_cast<double>(tr.events.size());
    const double mean = total / 1000.0;
    // per-boot count ~ Poisson(30); the 1000-boot mean is within 3 sigma
    const double tol = 3.0 * std::sqrt(30.0) / std::sqrt(1000.0);
    CHECK(mean == Approx(30.0).margin(tol));
}

TEST_CASE("generate: events are sorted and strictly after the anchor") {
    auto corpus = synth::default_corpus();
    corpus.boots_per_day = 5;
    for (const auto& tr : synth::generate(corpus, 9)) {
        double last = tr.dhcp_t;
        for (const auto& e : tr.events) {
            CHECK(e.t >= last);
            CHECK(e.t > tr.dhcp_t);
            last = e.t;
        }
    }
}

TEST_CASE("generate: day offsets place boots on distinct dates") {
    synth::Corpus corpus = synth::stationary_corpus(2);
    corpus.boots_per_day = 4;
    corpus.days = 3;
    auto traces = synth::generate(corpus, 1);
    std::set<int> days;
    for (const auto& tr : traces) days.insert(dataset::day_of(tr.dhcp_t));
    CHECK(days == std::set<int>{0, 1, 2});
}

TEST_CASE("generate: drift swaps the SLD set from the drift day onward") {
    synth::Corpus corpus = synth::stationary_corpus(2);
    corpus.boots_per_day = 2;
    corpus.days = 4;
    corpus.drift_day = 3; // 1-based: days 3 and 4 drift
    for (const auto& tr : synth::generate(corpus, 5)) {
        const bool drifted = dataset::day_of(tr.dhcp_t) >= 2;
        for (const auto& e : tr.events) {
            CHECK((e.qname.find("-alt.com") != std::string::npos) == drifted);
        }
    }
}

TEST_CASE("expected_frequency: pure rate passes through") {
    synth::DeviceProfile p{"P", "P", {}, {{"svc", 0.2}}};
    auto fv = synth::expected_frequency(p, featurize::HashResolution(32), featurize::TimeDelta(30.0));
    const int b = featurize::bucket("svc", featurize::HashResolution(32));
    for (int i = 0; i < 32; ++i)
        CHECK(fv.values[static_cast<std::size_t>(i)] == (i == b ? Approx(0.2) : Approx(0.0)));
}

TEST_CASE("expected_frequency: burst plus rate arithmetic") {
    synth::DeviceProfile p{"P", "P", {{"svc", 3}}, {{"svc", 0.1}}};
    auto fv = synth::expected_frequency(p, featurize::HashResolution(8), featurize::TimeDelta(30.0));
    const int b = featurize::bucket("svc", featurize::HashResolution(8));
    CHECK(fv.values[static_cast<std::size_t>(b)] == Approx((3.0 + 0.1 * 30.0) / 30.0));
}

TEST_CASE("expected_frequency: matches the empirical mean featurization") {
    synth::DeviceProfile profile{"MC", "MC", {{"burst-svc", 2}}, {{"raten-a", 0.4}, {"raten-b", 0.15}}};
    synth::Corpus corpus;
    corpus.boots_per_day = 1000;
    corpus.profiles.push_back(profile);
    const featurize::HashResolution h(16);
    const featurize::TimeDelta td(30.0);

    auto traces = synth::generate(corpus, 21);
    std::vector<double> mean(16, 0.0);
    for (const auto& tr : traces) {
        auto fv = featurize::featurize(tr, h, td);
        for (std::size_t i = 0; i < 16; ++i) mean[i] += fv.values[i];
    }
    for (double& v : mean) v /= 1000.0;

    auto expected = synth::expected_frequency(profile, h, td);
    // per-bucket rate variance: sum of rates landing there / td
    std::vector<double> rate_in_bucket(16, 0.0);
    for (const auto& s : profile.steady) rate_in_bucket[static_cast<std::size_t>(featurize::bucket(s.sld, h))] += s.rate;
    for (std::size_t i = 0; i < 16; ++i) {
        const double se = std::sqrt(rate_in_bucket[i] / (td.seconds * 1000.0));
        CHECK(mean[i] == Approx(expected.values[i]).margin(3.0 * se + 1e-9));
    }
}

TEST_CASE("identical profiles have identical expectations, disjoint profiles disjoint support") {
    synth::Corpus corpus = synth::default_corpus();
    const auto& spot = corpus.profiles[0]; // Echo Spot
    const auto& plus = corpus.profiles[1]; // Echo Plus
    const featurize::HashResolution h(32);
    const featurize::TimeDelta td(30.0);
    CHECK(synth::expected_frequency(spot, h, td) == synth::expected_frequency(plus, h, td));

    // two single-SLD devices engineered onto distinct buckets
    auto find = [&](const std::string& name) {
        for (const auto& p : corpus.profiles)
            if (p.product == name) return p;
        FAIL("profile not found");
        return corpus.profiles[0];
    };
    auto a = synth::expected_frequency(find("Smartlife Remote"), h, td);
    auto b = synth::expected_frequency(find("Cosori Cooker"), h, td);
    for (std::size_t i = 0; i < 32; ++i) CHECK(a.values[i] * b.values[i] == 0.0);
}

TEST_CASE("default corpus: 30 products, 27 manufacturers, engineered confusions") {
    synth::Corpus corpus = synth::default_corpus();
    REQUIRE(corpus.profiles.size() == 30);

    std::set<std::string> products, manufacturers;
    for (const auto& p : corpus.profiles) {
        products.insert(p.product);
        manufacturers.insert(p.manufacturer);
    }
    CHECK(products.size() == 30);
    CHECK(manufacturers.size() == 27);

    // corpus mapping matches the shipped reference table
    CHECK(synth::manufacturer_map(corpus) == dataset::default_manufacturer_map());

    // nearly-silent devices stay under 0.05 qps
    int sparse = 0;
    for (const auto& p : corpus.profiles) {
        double rate = 0.0;
        for (const auto& s : p.steady) rate += s.rate;
        if (p.boot_burst.empty() && rate < 0.05) ++sparse;
    }
    CHECK(sparse == 3);

    // at least 20 distinct SLDs overall
    std::set<std::string> slds;
    for (const auto& p : corpus.profiles) {
        for (const auto& b : p.boot_burst) slds.insert(b.sld);
        for (const auto& s : p.steady) slds.insert(s.sld);
    }
    CHECK(slds.size() >= 20);
}

TEST_CASE("corpus json: round-trips through save and load") {
    synth::Corpus corpus = synth::default_corpus();
    corpus.days = 4;
    corpus.drift_day = 2;
    auto round = synth::corpus_from_json(synth::to_json(corpus));
    CHECK(round == corpus);
}

TEST_CASE("the shipped corpus definition file matches the built-in default") {
    synth::Corpus shipped = synth::load_corpus_file(std::string(DNSID_DATA_DIR) + "/default_corpus.json");
    CHECK(shipped == synth::default_corpus());
}
