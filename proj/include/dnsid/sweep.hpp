#pragma once

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dnsid/capture.hpp"
#include "dnsid/dataset.hpp"
#include "dnsid/featurize.hpp"
#include "dnsid/mlp.hpp"

namespace dnsid::sweep {

struct MissingSlice : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientDates : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CorruptBundle : std::runtime_error {
    explicit CorruptBundle(const std::string& field) : std::runtime_error("corrupt bundle: " + field) {}
};

struct VersionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One point of the design space.
struct ConfigPoint {
    dataset::Granularity granularity = dataset::Granularity::product;
    int h = 32;
    int t_delta = 30;
    int hidden_layers = 2;

    bool operator==(const ConfigPoint&) const = default;
};

// The full grid: 3 layer counts x 5 hash resolutions x 60 time deltas x
// 2 granularities = 1800 points, each trained once per seed.
struct SweepSpace {
    std::vector<int> hidden_layers{1, 2, 3};
    std::vector<int> hash_resolutions{4, 8, 16, 32, 64};
    std::vector<int> time_deltas; // 1..60 in the full grid
    std::vector<dataset::Granularity> granularities{dataset::Granularity::product,
                                                     dataset::Granularity::manufacturer};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4};

    static SweepSpace full_grid() {
        SweepSpace s;
        s.time_deltas.resize(60);
        for (int i = 0; i < 60; ++i) s.time_deltas[static_cast<std::size_t>(i)] = i + 1;
        return s;
    }

    std::vector<ConfigPoint> enumerate() const {
        std::vector<ConfigPoint> points;
        points.reserve(granularities.size() * hidden_layers.size() * hash_resolutions.size() * time_deltas.size());
        for (auto g : granularities)
            for (int l : hidden_layers)
                for (int h : hash_resolutions)
                    for (int td : time_deltas) points.push_back(ConfigPoint{g, h, td, l});
        return points;
    }
};

inline std::string config_key(const ConfigPoint& p) {
    std::ostringstream os;
    os << "g=" << dataset::to_string(p.granularity) << ",h=" << p.h << ",td=" << p.t_delta
       << ",l=" << p.hidden_layers;
    return os.str();
}

// Stable hash of the canonical key; also seeds the point's dataset split.
inline std::uint64_t config_hash(const ConfigPoint& p) { return featurize::fnv1a64(config_key(p)); }

struct SweepRecord {
    ConfigPoint config;
    std::vector<std::uint64_t> seeds;
    std::vector<double> per_seed_accuracy;
    double mean_accuracy = 0.0;
    std::uint64_t best_seed = 0;
    double best_loss = 0.0;
    double best_accuracy = 0.0;
    double best_macro_f1 = 0.0;
    std::vector<std::vector<int>> best_confusion; // [predicted][actual]
    std::vector<std::string> classes;
    bool ok = true;
    std::string error;
};

// ---------------------------------------------------------------------------
// Model bundle: everything prediction needs, in one versioned JSON file.
// Weights and scaler bounds are hexadecimal float strings so a bundle
// round-trips with zero ULP drift.

constexpr int kBundleFormatVersion = 1;
constexpr const char* kHashAlgorithm = "fnv1a64";

struct ModelBundle {
    int format_version = kBundleFormatVersion;
    dataset::Granularity granularity = dataset::Granularity::product;
    int h = 0;
    double t_delta = 0.0;
    int hidden_layers = 0;
    dataset::LabelMap labels;
    dataset::ScalerBounds scaler;
    std::string hash_algorithm = kHashAlgorithm;
    std::uint64_t seed = 0;
    mlp::Network net;
};

namespace detail {

inline std::string double_to_hex(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

inline double hex_to_double(const std::string& s, const char* field) {
    const char* begin = s.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end != begin + s.size() || s.empty()) throw CorruptBundle(std::string(field) + " = \"" + s + "\"");
    return v;
}

inline nlohmann::json doubles_to_hex(const std::vector<double>& vs) {
    nlohmann::json out = nlohmann::json::array();
    for (double v : vs) out.push_back(double_to_hex(v));
    return out;
}

inline std::vector<double> hex_to_doubles(const nlohmann::json& j, const char* field) {
    if (!j.is_array()) throw CorruptBundle(field);
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& e : j) {
        if (!e.is_string()) throw CorruptBundle(field);
        out.push_back(hex_to_double(e.get<std::string>(), field));
    }
    return out;
}

} // namespace detail

inline ModelBundle make_bundle(const mlp::Network& net, const dataset::LabelMap& labels,
                               const dataset::ScalerBounds& scaler, int h, double t_delta,
                               std::uint64_t seed) {
    ModelBundle b;
    b.granularity = labels.granularity;
    b.h = h;
    b.t_delta = t_delta;
    b.hidden_layers = net.config.hidden_layers;
    b.labels = labels;
    b.scaler = scaler;
    b.seed = seed;
    b.net = net;
    return b;
}

inline nlohmann::json bundle_to_json(const ModelBundle& b) {
    nlohmann::json layers = nlohmann::json::array();
    for (const mlp::Layer& l : b.net.layers) {
        layers.push_back({{"in", l.in},
                          {"out", l.out},
                          {"w", detail::doubles_to_hex(l.w)},
                          {"b", detail::doubles_to_hex(l.b)}});
    }
    return nlohmann::json{{"format_version", b.format_version},
                          {"granularity", dataset::to_string(b.granularity)},
                          {"h", b.h},
                          {"t_delta", b.t_delta},
                          {"hidden_layers", b.hidden_layers},
                          {"hidden_width", b.net.config.hidden_width},
                          {"classes", b.labels.classes},
                          {"scaler",
                           {{"mins", detail::doubles_to_hex(b.scaler.mins)},
                            {"maxs", detail::doubles_to_hex(b.scaler.maxs)}}},
                          {"hash_algorithm", b.hash_algorithm},
                          {"seed", b.seed},
                          {"layers", layers}};
}

inline ModelBundle bundle_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw CorruptBundle("document");
    if (!j.contains("format_version") || !j["format_version"].is_number_integer()) throw CorruptBundle("format_version");
    if (j["format_version"].get<int>() != kBundleFormatVersion)
        throw VersionMismatch("unsupported bundle format_version " + j["format_version"].dump());
    if (!j.contains("hash_algorithm") || j["hash_algorithm"] != kHashAlgorithm)
        throw VersionMismatch("unsupported hash algorithm " + j.value("hash_algorithm", "<missing>"));

    auto require = [&](const char* field) -> const nlohmann::json& {
        if (!j.contains(field)) throw CorruptBundle(field);
        return j.at(field);
    };

    ModelBundle b;
    try {
        b.granularity = dataset::granularity_from_string(require("granularity").get<std::string>());
        b.h = require("h").get<int>();
        b.t_delta = require("t_delta").get<double>();
        b.hidden_layers = require("hidden_layers").get<int>();
        b.labels = dataset::LabelMap::from_classes(b.granularity, require("classes").get<std::vector<std::string>>());
        b.seed = require("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw CorruptBundle(e.what());
    }
    b.scaler.mins = detail::hex_to_doubles(require("scaler").value("mins", nlohmann::json()), "scaler.mins");
    b.scaler.maxs = detail::hex_to_doubles(require("scaler").value("maxs", nlohmann::json()), "scaler.maxs");
    if (b.scaler.mins.size() != b.scaler.maxs.size() || b.scaler.mins.size() != static_cast<std::size_t>(b.h))
        throw CorruptBundle("scaler length != h");

    const nlohmann::json& layers = require("layers");
    if (!layers.is_array() || layers.empty()) throw CorruptBundle("layers");
    int prev = b.h;
    for (const auto& lj : layers) {
        mlp::Layer layer;
        try {
            layer.in = lj.at("in").get<int>();
            layer.out = lj.at("out").get<int>();
        } catch (const nlohmann::json::exception&) {
            throw CorruptBundle("layer shape");
        }
        layer.w = detail::hex_to_doubles(lj.value("w", nlohmann::json()), "layer.w");
        layer.b = detail::hex_to_doubles(lj.value("b", nlohmann::json()), "layer.b");
        if (layer.in != prev || layer.w.size() != static_cast<std::size_t>(layer.in) * layer.out ||
            layer.b.size() != static_cast<std::size_t>(layer.out))
            throw CorruptBundle("layer dimensions do not chain");
        prev = layer.out;
        b.net.layers.push_back(std::move(layer));
    }
    if (prev != b.labels.size()) throw CorruptBundle("output width != class count");
    b.net.config.input_dim = b.h;
    b.net.config.hidden_layers = b.hidden_layers;
    b.net.config.hidden_width = j.value("hidden_width", 64);
    b.net.config.output_dim = b.labels.size();
    b.net.config.seed = b.seed;
    return b;
}

inline void save_bundle(const ModelBundle& b, const std::string& path) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << bundle_to_json(b).dump(1) << '\n';
}

inline ModelBundle load_bundle(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw CorruptBundle("not valid JSON");
    return bundle_from_json(j);
}

// models/td{t}_h{h}_l{layers}/{granularity}.model.json
inline std::string bundle_path(const std::string& root, const ConfigPoint& p) {
    std::ostringstream os;
    os << root << "/td" << p.t_delta << "_h" << p.h << "_l" << p.hidden_layers << '/'
       << dataset::to_string(p.granularity) << ".model.json";
    return os.str();
}

// ---------------------------------------------------------------------------
// Running the sweep

struct PointResult {
    SweepRecord record;
    mlp::Network best_net;
    dataset::LabelMap labels;
    dataset::ScalerBounds bounds;
};

// Trains one configuration once per seed on a split derived from the
// config key, averages the test accuracies, and keeps the best seed's
// artifacts (ties resolved toward the lowest seed).
inline PointResult run_point(const ConfigPoint& point, const std::vector<capture::BootTrace>& traces,
                             const std::vector<std::uint64_t>& seeds,
                             const dataset::ManufacturerMap& manufacturers = dataset::default_manufacturer_map()) {
    PointResult out;
    out.record.config = point;
    out.record.seeds = seeds;

    auto [splits, labels, bounds] =
        dataset::build_splits(traces, featurize::HashResolution(point.h),
                              featurize::TimeDelta(static_cast<double>(point.t_delta)), point.granularity,
                              config_hash(point), std::nullopt, manufacturers);
    out.labels = labels;
    out.bounds = bounds;

    mlp::Matrix test_x = mlp::detail::pack_features(splits.test);
    mlp::Matrix test_y = mlp::detail::pack_labels(splits.test, static_cast<std::size_t>(labels.size()));

    double best_acc = -1.0;
    for (std::uint64_t seed : seeds) {
        mlp::ModelConfig cfg;
        cfg.input_dim = point.h;
        cfg.hidden_layers = point.hidden_layers;
        cfg.output_dim = labels.size();
        cfg.seed = seed;
        auto [net, train_report] = mlp::train(cfg, splits);
        (void)train_report;
        mlp::Metrics m = mlp::metrics(net, splits.test);
        out.record.per_seed_accuracy.push_back(m.accuracy);
        if (m.accuracy > best_acc) {
            best_acc = m.accuracy;
            out.record.best_seed = seed;
            out.record.best_accuracy = m.accuracy;
            out.record.best_macro_f1 = m.macro_f1;
            out.record.best_confusion = m.confusion;
            out.record.best_loss = mlp::loss(mlp::forward_batch(net, test_x), test_y);
            out.best_net = std::move(net);
        }
    }
    double sum = 0.0;
    for (double a : out.record.per_seed_accuracy) sum += a;
    out.record.mean_accuracy = sum / static_cast<double>(out.record.per_seed_accuracy.size());
    out.record.classes = labels.classes;
    return out;
}

inline nlohmann::json record_to_json(const SweepRecord& r) {
    char key[24];
    std::snprintf(key, sizeof(key), "%016llx", static_cast<unsigned long long>(config_hash(r.config)));
    return nlohmann::json{{"key", key},
                          {"granularity", dataset::to_string(r.config.granularity)},
                          {"h", r.config.h},
                          {"t_delta", r.config.t_delta},
                          {"hidden_layers", r.config.hidden_layers},
                          {"seeds", r.seeds},
                          {"per_seed_accuracy", r.per_seed_accuracy},
                          {"mean_accuracy", r.mean_accuracy},
                          {"best_seed", r.best_seed},
                          {"best_loss", r.best_loss},
                          {"best_accuracy", r.best_accuracy},
                          {"best_macro_f1", r.best_macro_f1},
                          {"confusion", r.best_confusion},
                          {"classes", r.classes},
                          {"ok", r.ok},
                          {"error", r.error}};
}

inline SweepRecord record_from_json(const nlohmann::json& j) {
    SweepRecord r;
    r.config.granularity = dataset::granularity_from_string(j.at("granularity").get<std::string>());
    r.config.h = j.at("h").get<int>();
    r.config.t_delta = j.at("t_delta").get<int>();
    r.config.hidden_layers = j.at("hidden_layers").get<int>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    r.per_seed_accuracy = j.at("per_seed_accuracy").get<std::vector<double>>();
    r.mean_accuracy = j.at("mean_accuracy").get<double>();
    r.best_seed = j.at("best_seed").get<std::uint64_t>();
    r.best_loss = j.at("best_loss").get<double>();
    r.best_accuracy = j.at("best_accuracy").get<double>();
    r.best_macro_f1 = j.at("best_macro_f1").get<double>();
    r.best_confusion = j.value("confusion", std::vector<std::vector<int>>{});
    r.classes = j.value("classes", std::vector<std::string>{});
    r.ok = j.value("ok", true);
    r.error = j.value("error", "");
    return r;
}

// Results already present in an append-only JSONL log, keyed by config. A
// torn final line (interrupted writer) is ignored so the point reruns.
inline std::map<std::string, SweepRecord> load_results_log(const std::string& path) {
    std::map<std::string, SweepRecord> out;
    std::ifstream in(path);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) continue;
        try {
            SweepRecord r = record_from_json(j);
            out[config_key(r.config)] = std::move(r);
        } catch (const std::exception&) {
            continue;
        }
    }
    return out;
}

struct SweepOptions {
    std::string results_log;       // empty: in-memory only, no resume
    std::string models_dir;        // empty: do not persist best models
    int jobs = 1;
    std::function<void(const SweepRecord&, std::size_t, std::size_t)> on_record; // progress hook
};

// Enumerates the space, skips points already in the results log, and runs
// the rest (jobs > 1 trains points concurrently; the log has a single
// serialized appender). Returned records are in enumeration order no
// matter how workers were scheduled.
inline std::vector<SweepRecord> run_sweep(const SweepSpace& space, const std::vector<capture::BootTrace>& traces,
                                          const SweepOptions& options = {},
                                          const dataset::ManufacturerMap& manufacturers = dataset::default_manufacturer_map()) {
    const std::vector<ConfigPoint> points = space.enumerate();
    std::map<std::string, SweepRecord> done =
        options.results_log.empty() ? std::map<std::string, SweepRecord>{} : load_results_log(options.results_log);

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (!done.count(config_key(points[i]))) pending.push_back(i);

    std::ofstream log;
    if (!options.results_log.empty()) {
        std::filesystem::path p(options.results_log);
        if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
        log.open(options.results_log, std::ios::app);
        if (!log) throw std::runtime_error("cannot open results log " + options.results_log);
    }

    std::mutex merge_mutex;
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> finished{0};

    auto worker = [&]() {
        for (;;) {
            const std::size_t slot = next.fetch_add(1);
            if (slot >= pending.size()) return;
            const ConfigPoint& point = points[pending[slot]];
            SweepRecord record;
            record.config = point;
            record.seeds = space.seeds;
            std::optional<PointResult> result;
            try {
                result = run_point(point, traces, space.seeds, manufacturers);
                record = result->record;
            } catch (const std::exception& e) {
                record.ok = false;
                record.error = e.what();
            }
            if (result && !options.models_dir.empty()) {
                ModelBundle bundle = make_bundle(result->best_net, result->labels, result->bounds, point.h,
                                                 static_cast<double>(point.t_delta), record.best_seed);
                save_bundle(bundle, bundle_path(options.models_dir, point));
            }
            std::lock_guard<std::mutex> lock(merge_mutex);
            if (log.is_open()) {
                log << record_to_json(record).dump() << '\n';
                log.flush();
            }
            done[config_key(point)] = std::move(record);
            const std::size_t n = ++finished;
            if (options.on_record) options.on_record(done[config_key(point)], n, pending.size());
        }
    };

    const int jobs = std::max(1, options.jobs);
    if (jobs == 1 || pending.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int i = 0; i < jobs; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    std::vector<SweepRecord> records;
    records.reserve(points.size());
    for (const ConfigPoint& p : points) records.push_back(done.at(config_key(p)));
    return records;
}

// ---------------------------------------------------------------------------
// Result slices and figure data

struct SeriesPoint {
    int x = 0; // time delta or hash resolution
    double mean_accuracy = 0.0;
};

using Series = std::map<dataset::Granularity, std::vector<SeriesPoint>>;

namespace detail {

template <typename KeyOf, typename Match>
Series slice(const std::vector<SweepRecord>& records, KeyOf key_of, Match match, const char* what) {
    Series series;
    for (const SweepRecord& r : records) {
        if (!r.ok || !match(r.config)) continue;
        series[r.config.granularity].push_back(SeriesPoint{key_of(r.config), r.mean_accuracy});
    }
    if (series.empty()) throw MissingSlice(std::string("no records match the requested ") + what + " slice");
    for (auto& [g, pts] : series)
        std::sort(pts.begin(), pts.end(), [](const SeriesPoint& a, const SeriesPoint& b) { return a.x < b.x; });
    return series;
}

} // namespace detail

inline Series accuracy_vs_time_delta(const std::vector<SweepRecord>& records, int h = 32, int layers = 2) {
    return detail::slice(
        records, [](const ConfigPoint& c) { return c.t_delta; },
        [&](const ConfigPoint& c) { return c.h == h && c.hidden_layers == layers; }, "time-delta");
}

inline Series accuracy_vs_hash_resolution(const std::vector<SweepRecord>& records, int t_delta = 30, int layers = 2) {
    return detail::slice(
        records, [](const ConfigPoint& c) { return c.h; },
        [&](const ConfigPoint& c) { return c.t_delta == t_delta && c.hidden_layers == layers; }, "hash-resolution");
}

// ---------------------------------------------------------------------------
// Temporal holdout: train on the first train_days distinct dates (with an
// internal train/val/test split for the in-range reference accuracy), then
// score every later day on all of its traces.

struct DayAccuracy {
    int day = 0;
    double accuracy = 0.0;
    std::size_t samples = 0;
};

struct HoldoutResult {
    double in_range_accuracy = 0.0;
    std::vector<int> train_day_list;
    std::vector<DayAccuracy> days;
};

inline HoldoutResult temporal_holdout(const std::vector<capture::BootTrace>& traces, const ConfigPoint& config,
                                      std::uint64_t seed, int train_days = 2,
                                      const dataset::ManufacturerMap& manufacturers = dataset::default_manufacturer_map()) {
    std::set<int> day_set;
    for (const auto& tr : traces) day_set.insert(dataset::day_of(tr.dhcp_t));
    if (static_cast<int>(day_set.size()) < train_days + 1)
        throw InsufficientDates("need at least " + std::to_string(train_days + 1) + " distinct dates, have " +
                                std::to_string(day_set.size()));

    std::vector<int> days(day_set.begin(), day_set.end());
    const std::set<int> in_range(days.begin(), days.begin() + train_days);

    std::vector<capture::BootTrace> in_range_traces;
    for (const auto& tr : traces)
        if (in_range.count(dataset::day_of(tr.dhcp_t))) in_range_traces.push_back(tr);

    auto [splits, labels, bounds] =
        dataset::build_splits(in_range_traces, featurize::HashResolution(config.h),
                              featurize::TimeDelta(static_cast<double>(config.t_delta)), config.granularity, seed,
                              std::nullopt, manufacturers);

    mlp::ModelConfig cfg;
    cfg.input_dim = config.h;
    cfg.hidden_layers = config.hidden_layers;
    cfg.output_dim = labels.size();
    cfg.seed = seed;
    auto [net, report] = mlp::train(cfg, splits);
    (void)report;

    HoldoutResult out;
    out.train_day_list.assign(in_range.begin(), in_range.end());
    out.in_range_accuracy = mlp::metrics(net, splits.test).accuracy;

    for (std::size_t di = static_cast<std::size_t>(train_days); di < days.size(); ++di) {
        const int day = days[di];
        std::size_t correct = 0, total = 0;
        for (const auto& tr : traces) {
            if (dataset::day_of(tr.dhcp_t) != day) continue;
            featurize::FrequencyVector fv = featurize::featurize(
                tr, featurize::HashResolution(config.h), featurize::TimeDelta(static_cast<double>(config.t_delta)));
            std::vector<double> probs = mlp::forward(net, dataset::apply_scaler(fv, bounds));
            const std::string cls = config.granularity == dataset::Granularity::product
                                        ? tr.label
                                        : dataset::manufacturer_of(tr.label, manufacturers);
            std::size_t pred = mlp::detail::argmax_row(probs.data(), probs.size());
            if (static_cast<int>(pred) == labels.index_of(cls)) ++correct;
            ++total;
        }
        out.days.push_back(DayAccuracy{day, total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0, total});
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV emitters behind the `figures` surface

inline void write_series_csv(const Series& series, const char* x_name, std::ostream& out) {
    out << x_name << ",granularity,mean_accuracy\n";
    for (const auto& [g, pts] : series)
        for (const SeriesPoint& p : pts)
            out << p.x << ',' << dataset::to_string(g) << ',' << p.mean_accuracy << '\n';
}

inline void write_time_delta_csv(const Series& series, std::ostream& out) { write_series_csv(series, "t_delta", out); }

inline void write_hash_resolution_csv(const Series& series, std::ostream& out) { write_series_csv(series, "h", out); }

inline void write_day_csv(const HoldoutResult& r, std::ostream& out) {
    out << "day,accuracy,samples,scope\n";
    if (!r.train_day_list.empty())
        out << r.train_day_list.back() << ',' << r.in_range_accuracy << ",," << "in_range\n";
    for (const DayAccuracy& d : r.days) out << d.day << ',' << d.accuracy << ',' << d.samples << ",holdout\n";
}

// Rows are the predicted class, columns the actual class.
inline void write_confusion_csv(const std::vector<std::string>& classes,
                                const std::vector<std::vector<int>>& confusion, std::ostream& out) {
    out << "predicted";
    for (const auto& c : classes) out << ',' << c;
    out << '\n';
    for (std::size_t p = 0; p < confusion.size(); ++p) {
        out << classes.at(p);
        for (int v : confusion[p]) out << ',' << v;
        out << '\n';
    }
}

} // namespace dnsid::sweep
