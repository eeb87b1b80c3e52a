#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "dnsid/capture.hpp"
#include "dnsid/featurize.hpp"
#include "dnsid/rng.hpp"

namespace dnsid::dataset {

enum class Granularity { product, manufacturer };

inline const char* to_string(Granularity g) {
    return g == Granularity::product ? "product" : "manufacturer";
}

inline Granularity granularity_from_string(const std::string& s) {
    if (s == "product") return Granularity::product;
    if (s == "manufacturer") return Granularity::manufacturer;
    throw std::invalid_argument("unknown granularity \"" + s + "\"");
}

struct UnknownLabel : std::runtime_error {
    explicit UnknownLabel(const std::string& label)
        : std::runtime_error("no manufacturer mapping for \"" + label + "\"") {}
};

struct EmptyTrainingSet : std::runtime_error {
    EmptyTrainingSet() : std::runtime_error("empty training set") {}
};

struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientClassData : std::runtime_error {
    std::string class_name;
    InsufficientClassData(const std::string& cls, std::size_t n)
        : std::runtime_error("class \"" + cls + "\" has " + std::to_string(n) +
                             " trace(s); at least 2 are required"),
          class_name(cls) {}
};

// Ordered label space at one granularity. Classes are sorted
// lexicographically and indexed densely from 0.
struct LabelMap {
    Granularity granularity = Granularity::product;
    std::vector<std::string> classes;
    std::map<std::string, int> index;

    static LabelMap from_classes(Granularity g, std::vector<std::string> cls) {
        std::sort(cls.begin(), cls.end());
        cls.erase(std::unique(cls.begin(), cls.end()), cls.end());
        LabelMap m;
        m.granularity = g;
        m.classes = std::move(cls);
        for (int i = 0; i < static_cast<int>(m.classes.size()); ++i) m.index[m.classes[i]] = i;
        return m;
    }

    int size() const { return static_cast<int>(classes.size()); }

    int index_of(const std::string& name) const {
        auto it = index.find(name);
        if (it == index.end()) throw UnknownLabel(name);
        return it->second;
    }

    std::vector<double> one_hot(int idx) const {
        std::vector<double> v(classes.size(), 0.0);
        v[static_cast<std::size_t>(idx)] = 1.0;
        return v;
    }

    bool operator==(const LabelMap&) const = default;
};

using ManufacturerMap = std::map<std::string, std::string>;

// Product -> manufacturer table for the 30-device reference corpus. Shipped
// as data rather than derived from name prefixes at runtime.
inline const ManufacturerMap& default_manufacturer_map() {
    static const ManufacturerMap table = {
        {"Echo Spot", "Amazon"},
        {"Echo Plus", "Amazon"},
        {"Fire TV", "Amazon"},
        {"Google Home", "Google"},
        {"Blink Cam", "Blink"},
        {"Bosiwo Cam", "Bosiwo"},
        {"Wansview Cam", "Wansview"},
        {"Yi Cam", "Yi"},
        {"Anova Sousvide", "Anova"},
        {"Cosori Cooker", "Cosori"},
        {"Gosund Bulb", "Gosund"},
        {"Govee Strip", "Govee"},
        {"Honeywell T-stat", "Honeywell"},
        {"Levoit Humidifier", "Levoit"},
        {"Magichome Strip", "Magichome"},
        {"Meross Door Opener", "Meross"},
        {"Netatmo Weather", "Netatmo"},
        {"Smarter Coffee Machine", "Smarter"},
        {"Smartlife Remote", "Smartlife"},
        {"TP-Link Bulb", "TP-Link"},
        {"TP-Link Plug", "TP-Link"},
        {"Wemo Plug", "Wemo"},
        {"Insteon", "Insteon"},
        {"Lightify", "Lightify"},
        {"Philips Hue", "Philips"},
        {"Sengled", "Sengled"},
        {"Smartthings", "Smartthings"},
        {"SwitchBot", "SwitchBot"},
        {"Xiaomi", "Xiaomi"},
        {"Samsung TV", "Samsung"},
    };
    return table;
}

inline std::string manufacturer_of(const std::string& product_label,
                                   const ManufacturerMap& table = default_manufacturer_map()) {
    auto it = table.find(product_label);
    if (it == table.end()) throw UnknownLabel(product_label);
    return it->second;
}

// Per-coordinate extrema of the training split only.
struct ScalerBounds {
    std::vector<double> mins;
    std::vector<double> maxs;

    bool operator==(const ScalerBounds&) const = default;
};

inline ScalerBounds fit_scaler(const std::vector<featurize::FrequencyVector>& train_vectors) {
    if (train_vectors.empty()) throw EmptyTrainingSet();
    const std::size_t h = train_vectors.front().values.size();
    ScalerBounds b;
    b.mins = train_vectors.front().values;
    b.maxs = train_vectors.front().values;
    for (const auto& fv : train_vectors) {
        if (fv.values.size() != h) throw DimensionMismatch("frequency vectors differ in h");
        for (std::size_t i = 0; i < h; ++i) {
            b.mins[i] = std::min(b.mins[i], fv.values[i]);
            b.maxs[i] = std::max(b.maxs[i], fv.values[i]);
        }
    }
    return b;
}

// (v - min) / (max - min), clamped to [0, 1]. A degenerate coordinate
// (max == min) maps to 0.
inline std::vector<double> apply_scaler(const featurize::FrequencyVector& v, const ScalerBounds& b) {
    if (v.values.size() != b.mins.size())
        throw DimensionMismatch("vector has h=" + std::to_string(v.values.size()) +
                                ", scaler has h=" + std::to_string(b.mins.size()));
    std::vector<double> out(v.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double range = b.maxs[i] - b.mins[i];
        if (range == 0.0) {
            out[i] = 0.0;
        } else {
            out[i] = std::clamp((v.values[i] - b.mins[i]) / range, 0.0, 1.0);
        }
    }
    return out;
}

// UTC day index of a timestamp.
inline int day_of(double t) { return static_cast<int>(std::floor(t / 86400.0)); }

// Inclusive day-index range used for the temporal-holdout regime.
struct DateRange {
    int first_day = 0;
    int last_day = 0;

    bool contains(int day) const { return day >= first_day && day <= last_day; }
};

struct Sample {
    std::vector<double> features; // scaled, length h
    std::vector<double> one_hot;  // length C
    int label = -1;
    std::string boot_id;
    int date = 0;
};

struct SplitDataset {
    std::vector<Sample> train;
    std::vector<Sample> val;
    std::vector<Sample> test;
};

namespace detail {

inline std::size_t round_fraction(std::size_t n, double frac) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(n) * frac));
}

} // namespace detail

// Stratified, seeded 64/16/20 split (0.8*0.8 / 0.8*0.2 / 0.2). With a date
// filter, train/val come from in-range dates and test holds everything
// out of range. The scaler is fitted on the training split only.
inline std::tuple<SplitDataset, LabelMap, ScalerBounds>
build_splits(const std::vector<capture::BootTrace>& traces, featurize::HashResolution h,
             featurize::TimeDelta t_delta, Granularity granularity, std::uint64_t seed,
             std::optional<DateRange> date_filter = std::nullopt,
             const ManufacturerMap& manufacturers = default_manufacturer_map()) {
    struct Row {
        featurize::FrequencyVector fv;
        std::string cls;
        std::string boot_id;
        int date = 0;
    };
    std::vector<Row> rows;
    rows.reserve(traces.size());
    for (const auto& tr : traces) {
        Row r;
        r.fv = featurize::featurize(tr, h, t_delta);
        r.cls = granularity == Granularity::product ? tr.label : manufacturer_of(tr.label, manufacturers);
        r.boot_id = tr.boot_id;
        r.date = day_of(tr.dhcp_t);
        rows.push_back(std::move(r));
    }

    std::vector<std::string> class_names;
    for (const auto& r : rows) class_names.push_back(r.cls);
    LabelMap labels = LabelMap::from_classes(granularity, std::move(class_names));

    // class -> row indices, iterated in class order so the seeded shuffles
    // are independent of input ordering across runs
    std::vector<std::vector<std::size_t>> per_class(static_cast<std::size_t>(labels.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        per_class[static_cast<std::size_t>(labels.index_of(rows[i].cls))].push_back(i);

    Rng rng(seed);
    std::vector<std::size_t> train_idx, val_idx, test_idx;
    for (int c = 0; c < labels.size(); ++c) {
        auto& idx = per_class[static_cast<std::size_t>(c)];
        if (date_filter) {
            std::vector<std::size_t> in_range, out_range;
            for (std::size_t i : idx)
                (date_filter->contains(rows[i].date) ? in_range : out_range).push_back(i);
            if (in_range.size() < 2) throw InsufficientClassData(labels.classes[static_cast<std::size_t>(c)], in_range.size());
            rng.shuffle(in_range);
            std::size_t n_val = detail::round_fraction(in_range.size(), 0.2);
            for (std::size_t i = 0; i < in_range.size(); ++i)
                (i < n_val ? val_idx : train_idx).push_back(in_range[i]);
            test_idx.insert(test_idx.end(), out_range.begin(), out_range.end());
        } else {
            if (idx.size() < 2) throw InsufficientClassData(labels.classes[static_cast<std::size_t>(c)], idx.size());
            rng.shuffle(idx);
            std::size_t n_test = detail::round_fraction(idx.size(), 0.2);
            std::size_t n_val = detail::round_fraction(idx.size() - n_test, 0.2);
            for (std::size_t i = 0; i < idx.size(); ++i) {
                if (i < n_test)
                    test_idx.push_back(idx[i]);
                else if (i < n_test + n_val)
                    val_idx.push_back(idx[i]);
                else
                    train_idx.push_back(idx[i]);
            }
        }
    }

    if (train_idx.empty()) throw EmptyTrainingSet();
    std::vector<featurize::FrequencyVector> train_vectors;
    train_vectors.reserve(train_idx.size());
    for (std::size_t i : train_idx) train_vectors.push_back(rows[i].fv);
    ScalerBounds bounds = fit_scaler(train_vectors);

    auto make_samples = [&](const std::vector<std::size_t>& which) {
        std::vector<Sample> out;
        out.reserve(which.size());
        for (std::size_t i : which) {
            Sample s;
            s.features = apply_scaler(rows[i].fv, bounds);
            s.label = labels.index_of(rows[i].cls);
            s.one_hot = labels.one_hot(s.label);
            s.boot_id = rows[i].boot_id;
            s.date = rows[i].date;
            out.push_back(std::move(s));
        }
        return out;
    };

    SplitDataset splits;
    splits.train = make_samples(train_idx);
    splits.val = make_samples(val_idx);
    splits.test = make_samples(test_idx);
    return {std::move(splits), std::move(labels), std::move(bounds)};
}

// ---------------------------------------------------------------------------
// Single-file dataset export: a JSON header line, then one CSV row per
// sample: split,boot_id,date,f0,...,f{h-1},label_index

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

inline void save_dataset(const SplitDataset& splits, const LabelMap& labels, const ScalerBounds& bounds,
                         int h, double t_delta, std::uint64_t seed, std::ostream& out) {
    nlohmann::json header{{"format", "dnsid.dataset.v1"},
                          {"h", h},
                          {"t_delta", t_delta},
                          {"granularity", to_string(labels.granularity)},
                          {"seed", seed},
                          {"classes", labels.classes},
                          {"scaler", {{"mins", bounds.mins}, {"maxs", bounds.maxs}}}};
    out << header.dump() << '\n';
    auto emit = [&](const char* tag, const std::vector<Sample>& samples) {
        for (const Sample& s : samples) {
            out << tag << ',' << s.boot_id << ',' << s.date;
            for (double f : s.features) out << ',' << detail::format_double(f);
            out << ',' << s.label << '\n';
        }
    };
    emit("train", splits.train);
    emit("val", splits.val);
    emit("test", splits.test);
}

struct DatasetFile {
    SplitDataset splits;
    LabelMap labels;
    ScalerBounds bounds;
    int h = 0;
    double t_delta = 0;
    std::uint64_t seed = 0;
};

inline DatasetFile load_dataset(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("dataset: empty file");
    nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
    if (header.is_discarded() || header.value("format", "") != std::string("dnsid.dataset.v1"))
        throw std::runtime_error("dataset: bad header");

    DatasetFile d;
    d.h = header.at("h").get<int>();
    d.t_delta = header.at("t_delta").get<double>();
    d.seed = header.at("seed").get<std::uint64_t>();
    d.labels = LabelMap::from_classes(granularity_from_string(header.at("granularity").get<std::string>()),
                                      header.at("classes").get<std::vector<std::string>>());
    d.bounds.mins = header.at("scaler").at("mins").get<std::vector<double>>();
    d.bounds.maxs = header.at("scaler").at("maxs").get<std::vector<double>>();

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) fields.push_back(tok);
        if (fields.size() != static_cast<std::size_t>(d.h) + 4)
            throw std::runtime_error("dataset: wrong column count on line " + std::to_string(line_no));
        Sample s;
        s.boot_id = fields[1];
        s.date = std::stoi(fields[2]);
        s.features.resize(static_cast<std::size_t>(d.h));
        for (int i = 0; i < d.h; ++i) s.features[static_cast<std::size_t>(i)] = std::stod(fields[static_cast<std::size_t>(i) + 3]);
        s.label = std::stoi(fields.back());
        s.one_hot = d.labels.one_hot(s.label);
        if (fields[0] == "train")
            d.splits.train.push_back(std::move(s));
        else if (fields[0] == "val")
            d.splits.val.push_back(std::move(s));
        else if (fields[0] == "test")
            d.splits.test.push_back(std::move(s));
        else
            throw std::runtime_error("dataset: unknown split tag \"" + fields[0] + "\"");
    }
    return d;
}

} // namespace dnsid::dataset
