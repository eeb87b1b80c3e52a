#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <unistd.h>

#include "dnsid/rng.hpp"
#include "dnsid/sweep.hpp"
#include "dnsid/synth.hpp"

using namespace dnsid;
using Catch::Approx;

namespace {

// quick-to-train corpus: three separable classes
std::vector<capture::BootTrace> small_corpus(int boots = 20) {
    synth::Corpus corpus;
    corpus.boots_per_day = boots;
    corpus.profiles = {
        synth::DeviceProfile{"Dev A", "Maker A", {{"alpha-svc", 2}}, {{"alpha-svc", 0.4}}},
        synth::DeviceProfile{"Dev B", "Maker B", {{"bravo-svc", 2}}, {{"bravo-svc", 0.4}}},
        synth::DeviceProfile{"Dev C", "Maker C", {{"charlie-svc", 2}}, {{"charlie-svc", 0.4}}},
    };
    return synth::generate(corpus, 31);
}

dataset::ManufacturerMap small_map() {
    return {{"Dev A", "Maker A"}, {"Dev B", "Maker B"}, {"Dev C", "Maker C"}};
}

struct TempDir {
    std::filesystem::path path;
    TempDir() : path(std::filesystem::temp_directory_path() / ("dnsid_sweep_" + std::to_string(::getpid()))) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

sweep::SweepSpace tiny_space() {
    sweep::SweepSpace space;
    space.hidden_layers = {1, 2};
    space.hash_resolutions = {8};
    space.time_deltas = {5};
    space.granularities = {dataset::Granularity::product};
    space.seeds = {1, 2, 3, 4};
    return space;
}

std::string records_fingerprint(const std::vector<sweep::SweepRecord>& records) {
    std::string out;
    for (const auto& r : records) out += sweep::record_to_json(r).dump() + "\n";
    return out;
}

} // namespace

TEST_CASE("sweep space: the full grid enumerates exactly 1800 distinct points") {
    sweep::SweepSpace space = sweep::SweepSpace::full_grid();
    auto points = space.enumerate();
    CHECK(points.size() == 1800);
    std::set<std::string> keys;
    std::set<std::uint64_t> hashes;
    for (const auto& p : points) {
        keys.insert(sweep::config_key(p));
        hashes.insert(sweep::config_hash(p));
    }
    CHECK(keys.size() == 1800);
    CHECK(hashes.size() == 1800);
    CHECK(space.seeds.size() == 4);
}

TEST_CASE("run_point: averages four seeds and keeps the best seed's artifacts") {
    auto traces = small_corpus();
    sweep::ConfigPoint point{dataset::Granularity::product, 8, 5, 1};
    sweep::PointResult result = sweep::run_point(point, traces, {1, 2, 3, 4}, small_map());
    const sweep::SweepRecord& r = result.record;

    REQUIRE(r.per_seed_accuracy.size() == 4);
    double mean = 0.0, best = -1.0;
    for (double a : r.per_seed_accuracy) {
        mean += a;
        best = std::max(best, a);
    }
    mean /= 4.0;
    CHECK(r.mean_accuracy == mean);
    CHECK(r.best_accuracy == best);
    // ties resolve to the lowest seed
    std::size_t first_best = 0;
    while (r.per_seed_accuracy[first_best] != best) ++first_best;
    CHECK(r.best_seed == r.seeds[first_best]);
    CHECK(r.classes == std::vector<std::string>{"Dev A", "Dev B", "Dev C"});
    REQUIRE(r.best_confusion.size() == 3);

    // reproducibility: running the same point again gives identical accuracies
    sweep::PointResult again = sweep::run_point(point, traces, {1, 2, 3, 4}, small_map());
    CHECK(again.record.per_seed_accuracy == r.per_seed_accuracy);
}

TEST_CASE("run_sweep: reduced space gives one record per point and a readable log") {
    TempDir tmp;
    auto traces = small_corpus();
    sweep::SweepOptions options;
    options.results_log = (tmp.path / "results.jsonl").string();
    auto records = sweep::run_sweep(tiny_space(), traces, options, small_map());
    REQUIRE(records.size() == 2);
    for (const auto& r : records) CHECK(r.ok);

    auto loaded = sweep::load_results_log(options.results_log);
    CHECK(loaded.size() == 2);
    for (const auto& r : records) {
        auto it = loaded.find(sweep::config_key(r.config));
        REQUIRE(it != loaded.end());
        CHECK(it->second.per_seed_accuracy == r.per_seed_accuracy);
        CHECK(it->second.mean_accuracy == r.mean_accuracy);
    }
}

TEST_CASE("run_sweep: a sweep resumed from a partial log equals the fresh sweep") {
    TempDir tmp;
    auto traces = small_corpus();
    sweep::SweepSpace space = tiny_space();

    // fresh complete run
    sweep::SweepOptions fresh;
    fresh.results_log = (tmp.path / "fresh.jsonl").string();
    auto fresh_records = sweep::run_sweep(space, traces, fresh, small_map());

    // interrupted run: only the first point completes
    sweep::SweepSpace first_half = space;
    first_half.hidden_layers = {1};
    sweep::SweepOptions partial;
    partial.results_log = (tmp.path / "resume.jsonl").string();
    sweep::run_sweep(first_half, traces, partial, small_map());

    // resume with the full space over the same log
    auto resumed_records = sweep::run_sweep(space, traces, partial, small_map());
    CHECK(records_fingerprint(resumed_records) == records_fingerprint(fresh_records));
}

TEST_CASE("run_sweep: a torn final log line is ignored and the point reruns") {
    TempDir tmp;
    auto traces = small_corpus();
    sweep::SweepSpace space = tiny_space();

    sweep::SweepOptions options;
    options.results_log = (tmp.path / "torn.jsonl").string();
    auto fresh_records = sweep::run_sweep(space, traces, options, small_map());

    // chop the second record in half, as an interrupted writer would
    std::ifstream in(options.results_log);
    std::string line1, line2;
    std::getline(in, line1);
    std::getline(in, line2);
    in.close();
    {
        std::ofstream out(options.results_log, std::ios::trunc);
        out << line1 << '\n' << line2.substr(0, line2.size() / 2);
    }
    auto resumed = sweep::run_sweep(space, traces, options, small_map());
    CHECK(records_fingerprint(resumed) == records_fingerprint(fresh_records));
}

TEST_CASE("run_sweep: saves each point's best model under the documented layout") {
    TempDir tmp;
    auto traces = small_corpus();
    sweep::SweepOptions options;
    options.models_dir = (tmp.path / "models").string();
    auto records = sweep::run_sweep(tiny_space(), traces, options, small_map());
    for (const auto& r : records) {
        const std::string path = sweep::bundle_path(options.models_dir, r.config);
        INFO(path);
        REQUIRE(std::filesystem::exists(path));
        sweep::ModelBundle bundle = sweep::load_bundle(path);
        CHECK(bundle.h == r.config.h);
        CHECK(bundle.seed == r.best_seed);
    }
}

TEST_CASE("run_sweep: per-point failures are recorded, not fatal") {
    auto traces = small_corpus(1); // one boot per class: too few to split
    sweep::SweepOptions options;
    auto records = sweep::run_sweep(tiny_space(), traces, options, small_map());
    REQUIRE(records.size() == 2);
    for (const auto& r : records) {
        CHECK_FALSE(r.ok);
        CHECK_FALSE(r.error.empty());
    }
}

TEST_CASE("run_sweep: parallel jobs produce the same records as one job") {
    auto traces = small_corpus();
    sweep::SweepOptions serial, parallel;
    parallel.jobs = 3;
    auto a = sweep::run_sweep(tiny_space(), traces, serial, small_map());
    auto b = sweep::run_sweep(tiny_space(), traces, parallel, small_map());
    CHECK(records_fingerprint(a) == records_fingerprint(b));
}

TEST_CASE("record json: round-trips every field") {
    auto traces = small_corpus();
    sweep::ConfigPoint point{dataset::Granularity::product, 8, 5, 2};
    sweep::SweepRecord r = sweep::run_point(point, traces, {1, 2, 3, 4}, small_map()).record;
    sweep::SweepRecord round = sweep::record_from_json(sweep::record_to_json(r));
    CHECK(sweep::record_to_json(round).dump() == sweep::record_to_json(r).dump());
}

TEST_CASE("bundle: save and load give bit-identical predictions") {
    TempDir tmp;
    auto traces = small_corpus();
    sweep::ConfigPoint point{dataset::Granularity::product, 8, 5, 2};
    sweep::PointResult result = sweep::run_point(point, traces, {1}, small_map());
    sweep::ModelBundle bundle =
        sweep::make_bundle(result.best_net, result.labels, result.bounds, point.h, point.t_delta, 1);

    const std::string path = sweep::bundle_path(tmp.path.string(), point);
    CHECK(path.find("td5_h8_l2/product.model.json") != std::string::npos);
    sweep::save_bundle(bundle, path);
    sweep::ModelBundle loaded = sweep::load_bundle(path);

    CHECK(loaded.labels == bundle.labels);
    CHECK(loaded.scaler == bundle.scaler);
    Rng rng(77);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> x(8);
        for (double& v : x) v = rng.uniform(0.0, 1.0);
        auto p = mlp::forward(bundle.net, x);
        auto q = mlp::forward(loaded.net, x);
        REQUIRE(p.size() == q.size());
        for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == q[i]); // exact
    }
}

TEST_CASE("bundle: truncation, version and hash-tag mismatches are detected") {
    TempDir tmp;
    auto traces = small_corpus();
    sweep::ConfigPoint point{dataset::Granularity::product, 8, 5, 1};
    sweep::PointResult result = sweep::run_point(point, traces, {1}, small_map());
    sweep::ModelBundle bundle =
        sweep::make_bundle(result.best_net, result.labels, result.bounds, point.h, point.t_delta, 1);
    const std::string path = (tmp.path / "bundle.json").string();
    sweep::save_bundle(bundle, path);

    // truncated file
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    {
        std::ofstream out(path, std::ios::trunc);
        out << text.substr(0, text.size() / 2);
    }
    CHECK_THROWS_AS(sweep::load_bundle(path), sweep::CorruptBundle);

    // foreign hash tag
    nlohmann::json j = sweep::bundle_to_json(bundle);
    j["hash_algorithm"] = "siphash24";
    CHECK_THROWS_AS(sweep::bundle_from_json(j), sweep::VersionMismatch);

    // future format version
    j = sweep::bundle_to_json(bundle);
    j["format_version"] = 2;
    CHECK_THROWS_AS(sweep::bundle_from_json(j), sweep::VersionMismatch);

    // missing field
    j = sweep::bundle_to_json(bundle);
    j.erase("scaler");
    CHECK_THROWS_AS(sweep::bundle_from_json(j), sweep::CorruptBundle);
}

TEST_CASE("slices: time-delta and hash-resolution series from records") {
    std::vector<sweep::SweepRecord> records;
    for (int td : {1, 10, 30}) {
        sweep::SweepRecord r;
        r.config = {dataset::Granularity::product, 32, td, 2};
        r.mean_accuracy = 0.5 + 0.01 * td;
        records.push_back(r);
    }
    sweep::SweepRecord other;
    other.config = {dataset::Granularity::product, 16, 30, 2}; // different h, excluded
    other.mean_accuracy = 0.0;
    records.push_back(other);

    auto series = sweep::accuracy_vs_time_delta(records, 32, 2);
    REQUIRE(series.count(dataset::Granularity::product) == 1);
    const auto& pts = series[dataset::Granularity::product];
    REQUIRE(pts.size() == 3);
    CHECK(pts[0].x == 1);
    CHECK(pts[2].x == 30);
    CHECK(pts[2].mean_accuracy == Approx(0.8));

    CHECK_THROWS_AS(sweep::accuracy_vs_time_delta(records, 64, 2), sweep::MissingSlice);

    auto hseries = sweep::accuracy_vs_hash_resolution(records, 30, 2);
    REQUIRE(hseries[dataset::Granularity::product].size() == 2); // h = 16 and 32
}

TEST_CASE("temporal holdout: needs strictly more dates than training days") {
    synth::Corpus corpus = synth::stationary_corpus(2);
    corpus.boots_per_day = 4;
    corpus.days = 2;
    auto traces = synth::generate(corpus, 3);
    sweep::ConfigPoint point{dataset::Granularity::product, 16, 10, 1};
    dataset::ManufacturerMap map = synth::manufacturer_map(corpus);
    CHECK_THROWS_AS(sweep::temporal_holdout(traces, point, 1, 2, map), sweep::InsufficientDates);
}

TEST_CASE("temporal holdout: reports one accuracy per held-out day") {
    synth::Corpus corpus = synth::stationary_corpus(3);
    corpus.boots_per_day = 10;
    corpus.days = 4;
    auto traces = synth::generate(corpus, 3);
    sweep::ConfigPoint point{dataset::Granularity::product, 16, 10, 1};
    auto result = sweep::temporal_holdout(traces, point, 1, 2, synth::manufacturer_map(corpus));
    CHECK(result.train_day_list == std::vector<int>{0, 1});
    REQUIRE(result.days.size() == 2);
    CHECK(result.days[0].day == 2);
    CHECK(result.days[1].day == 3);
    CHECK(result.days[0].samples == 30);
}

TEST_CASE("figure csv emitters produce the documented headers") {
    std::vector<sweep::SweepRecord> records;
    sweep::SweepRecord r;
    r.config = {dataset::Granularity::manufacturer, 32, 30, 2};
    r.mean_accuracy = 0.93;
    records.push_back(r);

    std::ostringstream td_csv;
    sweep::write_time_delta_csv(sweep::accuracy_vs_time_delta(records, 32, 2), td_csv);
    CHECK(td_csv.str() == "t_delta,granularity,mean_accuracy\n30,manufacturer,0.93\n");

    std::ostringstream conf_csv;
    sweep::write_confusion_csv({"A", "B"}, {{3, 1}, {0, 2}}, conf_csv);
    CHECK(conf_csv.str() == "predicted,A,B\nA,3,1\nB,0,2\n");

    sweep::HoldoutResult hold;
    hold.in_range_accuracy = 0.9;
    hold.train_day_list = {0, 1};
    hold.days = {{2, 0.875, 40}};
    std::ostringstream day_csv;
    sweep::write_day_csv(hold, day_csv);
    CHECK(day_csv.str() == "day,accuracy,samples,scope\n1,0.9,,in_range\n2,0.875,40,holdout\n");
}
