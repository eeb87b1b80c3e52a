// dnsid command line: synthesize corpora, ingest captures, build datasets,
// train and sweep classifiers, emit figure data, and classify event streams.
//
// Exit codes: 0 success, 1 usage error, 2 data/runtime error. Data streams
// (stdout of classify/figures) stay machine-clean; progress goes to stderr.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dnsid/capture.hpp"
#include "dnsid/dataset.hpp"
#include "dnsid/featurize.hpp"
#include "dnsid/jsonl.hpp"
#include "dnsid/mlp.hpp"
#include "dnsid/runtime.hpp"
#include "dnsid/sweep.hpp"
#include "dnsid/synth.hpp"

namespace {

using namespace dnsid;

std::vector<capture::BootTrace> read_traces(const std::string& path) {
    if (path == "-") return capture::read_jsonl(std::cin);
    return capture::read_jsonl_file(path);
}

void write_traces(const std::vector<capture::BootTrace>& traces, const std::string& path) {
    if (path == "-") {
        capture::write_jsonl(traces, std::cout);
    } else {
        capture::write_jsonl_file(traces, path);
    }
}

// Accepts either a plain {"product": "manufacturer"} object or a corpus
// definition file (the mapping is derived from its profiles).
dataset::ManufacturerMap load_manufacturers(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    if (j.contains("profiles")) return synth::manufacturer_map(synth::corpus_from_json(j));
    dataset::ManufacturerMap map;
    for (auto it = j.begin(); it != j.end(); ++it) map[it.key()] = it.value().get<std::string>();
    return map;
}

synth::Corpus corpus_by_name(const std::string& name) {
    if (name == "default") return synth::default_corpus();
    if (name == "rate") return synth::rate_distinguished_corpus();
    if (name == "stationary") return synth::stationary_corpus();
    return synth::load_corpus_file(name);
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        auto colon = tok.find(':');
        if (colon != std::string::npos) {
            int lo = std::stoi(tok.substr(0, colon));
            int hi = std::stoi(tok.substr(colon + 1));
            for (int v = lo; v <= hi; ++v) out.push_back(v);
        } else if (!tok.empty()) {
            out.push_back(std::stoi(tok));
        }
    }
    return out;
}

std::vector<dataset::Granularity> parse_granularities(const std::string& text) {
    if (text == "both") return {dataset::Granularity::product, dataset::Granularity::manufacturer};
    std::vector<dataset::Granularity> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(dataset::granularity_from_string(tok));
    return out;
}

struct OutStream {
    explicit OutStream(const std::string& path) {
        if (path != "-") {
            file.open(path);
            if (!file) throw std::runtime_error("cannot open " + path);
        }
    }
    std::ostream& get() { return file.is_open() ? file : std::cout; }
    std::ofstream file;
};

int cmd_synth(const std::string& corpus_name, std::uint64_t seed, int boots, int days, int drift_day,
              const std::string& out, const std::string& emit_corpus) {
    synth::Corpus corpus = corpus_by_name(corpus_name);
    if (boots > 0) corpus.boots_per_day = boots;
    if (days > 0) corpus.days = days;
    if (drift_day >= 0) corpus.drift_day = drift_day;
    if (!emit_corpus.empty()) synth::save_corpus_file(corpus, emit_corpus);
    auto traces = synth::generate(corpus, seed);
    write_traces(traces, out);
    std::cerr << "synth: " << traces.size() << " boot traces from " << corpus.profiles.size() << " profiles\n";
    return 0;
}

int cmd_ingest(const std::string& pcap_path, const std::string& device_id, const std::string& label,
               const std::string& boot_id, const std::string& out) {
    capture::RawCapture raw = capture::read_pcap_file(pcap_path);
    capture::ParseStats stats;
    capture::BootTrace trace = capture::parse_capture(raw, device_id, label, boot_id, &stats);
    write_traces({trace}, out);
    std::cerr << "ingest: " << stats.frames << " frames, " << trace.events.size() << " dns queries, "
              << stats.malformed << " malformed frames skipped\n";
    return 0;
}

int cmd_build_dataset(const std::string& in, int h, int td, const std::string& granularity, std::uint64_t seed,
                      const std::string& train_days, const std::string& manufacturers_path, const std::string& out) {
    auto traces = read_traces(in);
    dataset::ManufacturerMap map =
        manufacturers_path.empty() ? dataset::default_manufacturer_map() : load_manufacturers(manufacturers_path);
    std::optional<dataset::DateRange> range;
    if (!train_days.empty()) {
        auto colon = train_days.find(':');
        if (colon == std::string::npos) throw CLI::ValidationError("--train-days expects FIRST:LAST");
        range = dataset::DateRange{std::stoi(train_days.substr(0, colon)), std::stoi(train_days.substr(colon + 1))};
    }
    auto [splits, labels, bounds] =
        dataset::build_splits(traces, featurize::HashResolution(h), featurize::TimeDelta(td),
                              dataset::granularity_from_string(granularity), seed, range, map);
    OutStream os(out);
    dataset::save_dataset(splits, labels, bounds, h, td, seed, os.get());
    std::cerr << "build-dataset: " << splits.train.size() << " train / " << splits.val.size() << " val / "
              << splits.test.size() << " test samples, " << labels.size() << " classes\n";
    return 0;
}

int cmd_train(const std::string& in, int h, int td, int layers, const std::string& granularity, std::uint64_t seed,
              std::uint64_t split_seed, bool split_seed_set, const std::string& manufacturers_path,
              const std::string& out_model, const std::string& out_report) {
    auto traces = read_traces(in);
    dataset::ManufacturerMap map =
        manufacturers_path.empty() ? dataset::default_manufacturer_map() : load_manufacturers(manufacturers_path);

    sweep::ConfigPoint point{dataset::granularity_from_string(granularity), h, td, layers};
    const std::uint64_t effective_split_seed = split_seed_set ? split_seed : sweep::config_hash(point);
    auto [splits, labels, bounds] =
        dataset::build_splits(traces, featurize::HashResolution(h), featurize::TimeDelta(td), point.granularity,
                              effective_split_seed, std::nullopt, map);

    mlp::ModelConfig cfg;
    cfg.input_dim = h;
    cfg.hidden_layers = layers;
    cfg.output_dim = labels.size();
    cfg.seed = seed;
    auto [net, report] = mlp::train(cfg, splits);
    mlp::Metrics test = mlp::metrics(net, splits.test);

    if (!out_model.empty()) {
        sweep::ModelBundle bundle = sweep::make_bundle(net, labels, bounds, h, td, seed);
        sweep::save_bundle(bundle, out_model);
    }
    if (!out_report.empty()) {
        nlohmann::json j{{"epochs_run", report.epochs_run},
                         {"stopped_early", report.stopped_early},
                         {"best_epoch", report.best_epoch},
                         {"train_loss", report.train_loss},
                         {"train_accuracy", report.train_accuracy},
                         {"val_loss", report.val_loss},
                         {"val_accuracy", report.val_accuracy},
                         {"test", {{"accuracy", test.accuracy}, {"macro_f1", test.macro_f1}}}};
        OutStream os(out_report);
        os.get() << j.dump(1) << '\n';
    }
    std::cerr << "train: " << report.epochs_run << " epochs"
              << (report.stopped_early ? " (early stop)" : "") << ", test accuracy " << test.accuracy
              << ", macro f1 " << test.macro_f1 << '\n';
    return 0;
}

int cmd_sweep(const std::string& in, const std::string& space_name, const std::string& layers,
              const std::string& hashes, const std::string& tds, const std::string& granularity,
              const std::string& seeds, const std::string& out, int jobs, const std::string& models_dir,
              const std::string& manufacturers_path) {
    auto traces = read_traces(in);
    dataset::ManufacturerMap map =
        manufacturers_path.empty() ? dataset::default_manufacturer_map() : load_manufacturers(manufacturers_path);

    sweep::SweepSpace space = sweep::SweepSpace::full_grid();
    if (space_name == "small") {
        space.hidden_layers = {2};
        space.hash_resolutions = {32};
        space.time_deltas = {30};
    }
    if (!layers.empty()) space.hidden_layers = parse_int_list(layers);
    if (!hashes.empty()) space.hash_resolutions = parse_int_list(hashes);
    if (!tds.empty()) space.time_deltas = parse_int_list(tds);
    if (!granularity.empty()) space.granularities = parse_granularities(granularity);
    if (!seeds.empty()) {
        space.seeds.clear();
        for (int s : parse_int_list(seeds)) space.seeds.push_back(static_cast<std::uint64_t>(s));
    }

    sweep::SweepOptions options;
    options.results_log = out;
    options.models_dir = models_dir;
    options.jobs = jobs;
    options.on_record = [](const sweep::SweepRecord& r, std::size_t done, std::size_t total) {
        std::cerr << "sweep: [" << done << '/' << total << "] " << sweep::config_key(r.config);
        if (r.ok)
            std::cerr << " mean accuracy " << r.mean_accuracy << '\n';
        else
            std::cerr << " FAILED: " << r.error << '\n';
    };
    auto records = sweep::run_sweep(space, traces, options, map);
    std::cerr << "sweep: " << records.size() << " records in " << out << '\n';
    return 0;
}

int cmd_figures(const std::string& fig, const std::string& results_path, const std::string& traces_path, int h,
                int td, int layers, const std::string& granularity, std::uint64_t seed, int train_days,
                const std::string& manufacturers_path, const std::string& out) {
    OutStream os(out);
    if (fig == "day") {
        if (traces_path.empty()) throw CLI::ValidationError("--fig day requires --traces");
        auto traces = read_traces(traces_path);
        dataset::ManufacturerMap map =
            manufacturers_path.empty() ? dataset::default_manufacturer_map() : load_manufacturers(manufacturers_path);
        sweep::ConfigPoint point{dataset::granularity_from_string(granularity), h, td, layers};
        sweep::HoldoutResult r = sweep::temporal_holdout(traces, point, seed, train_days, map);
        sweep::write_day_csv(r, os.get());
        return 0;
    }

    if (results_path.empty()) throw CLI::ValidationError("--fig " + fig + " requires --results");
    auto by_key = sweep::load_results_log(results_path);
    std::vector<sweep::SweepRecord> records;
    records.reserve(by_key.size());
    for (auto& [key, r] : by_key) records.push_back(r);

    if (fig == "time-delta") {
        sweep::write_time_delta_csv(sweep::accuracy_vs_time_delta(records, h, layers), os.get());
    } else if (fig == "hash-resolution") {
        sweep::write_hash_resolution_csv(sweep::accuracy_vs_hash_resolution(records, td, layers), os.get());
    } else if (fig == "confusion") {
        sweep::ConfigPoint point{dataset::granularity_from_string(granularity), h, td, layers};
        const std::string key = sweep::config_key(point);
        auto it = by_key.find(key);
        if (it == by_key.end()) throw sweep::MissingSlice("no record for " + key);
        sweep::write_confusion_csv(it->second.classes, it->second.best_confusion, os.get());
    } else {
        throw CLI::ValidationError("unknown figure \"" + fig + "\"");
    }
    return 0;
}

int cmd_classify(const std::string& model_path, const std::string& in, const std::string& out,
                 double min_confidence) {
    sweep::ModelBundle bundle = sweep::load_bundle(model_path);
    runtime::SessionStore store(bundle);

    std::ifstream file_in;
    if (in != "-") {
        file_in.open(in);
        if (!file_in) throw std::runtime_error("cannot open " + in);
    }
    std::istream& is = in == "-" ? std::cin : file_in;
    OutStream os(out);

    auto emit = [&](const runtime::Prediction& p) {
        if (p.confidence < min_confidence) return;
        nlohmann::json j{{"device_id", p.device_id},
                         {"label", p.label},
                         {"confidence", p.confidence},
                         {"events", p.window_event_count},
                         {"t", p.emitted_at}};
        os.get() << j.dump() << '\n';
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw capture::SchemaError(line_no, "not a JSON object");
        const std::string kind = j.value("kind", "");
        const std::string device_id = j.value("device_id", "");
        if (device_id.empty() || !j.contains("t") || !j["t"].is_number())
            throw capture::SchemaError(line_no, "missing device_id or t");
        const double t = j["t"].get<double>();
        std::optional<runtime::Prediction> p;
        if (kind == "dhcp") {
            p = store.ingest(runtime::StreamEvent::anchor(device_id, t));
        } else if (kind == "dns") {
            if (!j.contains("qname") || !j["qname"].is_string()) throw capture::SchemaError(line_no, "missing qname");
            p = store.ingest(
                runtime::StreamEvent::query(device_id, t, capture::detail::lower_no_dot(j["qname"].get<std::string>())));
        } else if (kind == "tick") {
            for (const auto& pred : store.tick(t)) emit(pred);
            continue;
        } else {
            throw capture::SchemaError(line_no, "unknown kind \"" + kind + "\"");
        }
        if (p) emit(*p);
    }
    for (const auto& pred : store.flush()) emit(pred);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"IoT device identification from first-seconds DNS traffic"};
    app.set_help_flag("--help", "print help"); // keep --h free for the hash resolution
    app.require_subcommand(1);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic boot-trace corpus");
    std::string synth_corpus = "default", synth_out, synth_emit_corpus;
    std::uint64_t synth_seed = 1;
    int synth_boots = 0, synth_days = 0, synth_drift = -1;
    synth_cmd->add_option("--corpus", synth_corpus, "default|rate|stationary or a corpus JSON file");
    synth_cmd->add_option("--seed", synth_seed, "generator seed");
    synth_cmd->add_option("--boots", synth_boots, "boots per profile per day");
    synth_cmd->add_option("--days", synth_days, "number of simulated days");
    synth_cmd->add_option("--drift-day", synth_drift, "1-based day at which SLD sets change (0 = off)");
    synth_cmd->add_option("--emit-corpus", synth_emit_corpus, "also write the corpus definition JSON here");
    synth_cmd->add_option("--out", synth_out, "output JSONL path, - for stdout")->required();

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "Parse a PCAP into a boot trace");
    std::string ingest_pcap, ingest_device, ingest_label, ingest_boot, ingest_out = "-";
    ingest_cmd->add_option("--pcap", ingest_pcap, "classic pcap file (Ethernet linktype)")->required();
    ingest_cmd->add_option("--device-id", ingest_device, "device MAC, e.g. aa:bb:cc:dd:ee:ff")->required();
    ingest_cmd->add_option("--label", ingest_label, "ground-truth device name");
    ingest_cmd->add_option("--boot-id", ingest_boot, "boot id (default: derived)");
    ingest_cmd->add_option("--out", ingest_out, "output JSONL path, - for stdout");

    // build-dataset
    auto* bd_cmd = app.add_subcommand("build-dataset", "Featurize traces into a split dataset file");
    std::string bd_in, bd_granularity = "product", bd_train_days, bd_manufacturers, bd_out;
    int bd_h = 32, bd_td = 30;
    std::uint64_t bd_seed = 1;
    bd_cmd->add_option("--in", bd_in, "trace JSONL path, - for stdin")->required();
    bd_cmd->add_option("--h", bd_h, "hash resolution");
    bd_cmd->add_option("--td", bd_td, "time delta, seconds");
    bd_cmd->add_option("--granularity", bd_granularity, "product|manufacturer");
    bd_cmd->add_option("--seed", bd_seed, "split shuffle seed");
    bd_cmd->add_option("--train-days", bd_train_days, "FIRST:LAST day range kept for train/val");
    bd_cmd->add_option("--manufacturers", bd_manufacturers, "manufacturer map or corpus JSON");
    bd_cmd->add_option("--out", bd_out, "dataset file path, - for stdout")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train one classifier configuration");
    std::string train_in, train_granularity = "product", train_manufacturers, train_model, train_report;
    int train_h = 32, train_td = 30, train_layers = 2;
    std::uint64_t train_seed = 1, train_split_seed = 0;
    train_cmd->add_option("--in", train_in, "trace JSONL path, - for stdin")->required();
    train_cmd->add_option("--h", train_h, "hash resolution");
    train_cmd->add_option("--td", train_td, "time delta, seconds");
    train_cmd->add_option("--layers", train_layers, "hidden layers (1, 2 or 3)");
    train_cmd->add_option("--granularity", train_granularity, "product|manufacturer");
    train_cmd->add_option("--seed", train_seed, "weight init / epoch shuffle seed");
    auto* split_seed_opt = train_cmd->add_option("--split-seed", train_split_seed,
                                                 "dataset split seed (default: derived from the config)");
    train_cmd->add_option("--manufacturers", train_manufacturers, "manufacturer map or corpus JSON");
    train_cmd->add_option("--out-model", train_model, "model bundle output path");
    train_cmd->add_option("--out-report", train_report, "training report JSON path, - for stdout");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Train the design-space grid with 4 seeds per point");
    std::string sw_in, sw_space = "full", sw_layers, sw_hashes, sw_tds, sw_granularity, sw_seeds, sw_out = "results.jsonl",
                sw_models, sw_manufacturers;
    int sw_jobs = 1;
    sweep_cmd->add_option("--in", sw_in, "trace JSONL path, - for stdin")->required();
    sweep_cmd->add_option("--space", sw_space, "full|small (overridable per axis)");
    sweep_cmd->add_option("--layers", sw_layers, "hidden layer counts, e.g. 1,2,3");
    sweep_cmd->add_option("--h", sw_hashes, "hash resolutions, e.g. 4,8,16,32,64");
    sweep_cmd->add_option("--td", sw_tds, "time deltas, e.g. 1:60 or 1,30,60");
    sweep_cmd->add_option("--granularity", sw_granularity, "product|manufacturer|both");
    sweep_cmd->add_option("--seeds", sw_seeds, "training seeds, e.g. 1,2,3,4");
    sweep_cmd->add_option("--out", sw_out, "append-only results log (JSONL); enables resume");
    sweep_cmd->add_option("--jobs", sw_jobs, "parallel training jobs");
    sweep_cmd->add_option("--models-dir", sw_models, "save each point's best model under this directory");
    sweep_cmd->add_option("--manufacturers", sw_manufacturers, "manufacturer map or corpus JSON");

    // figures
    auto* fig_cmd = app.add_subcommand("figures", "Emit CSV data behind the evaluation figures");
    std::string fig_name, fig_results, fig_traces, fig_granularity = "product", fig_manufacturers, fig_out = "-";
    int fig_h = 32, fig_td = 30, fig_layers = 2, fig_train_days = 2;
    std::uint64_t fig_seed = 1;
    fig_cmd->add_option("--fig", fig_name, "time-delta|hash-resolution|confusion|day")->required();
    fig_cmd->add_option("--results", fig_results, "sweep results log (JSONL)");
    fig_cmd->add_option("--traces", fig_traces, "trace JSONL (for --fig day)");
    fig_cmd->add_option("--h", fig_h, "hash resolution slice");
    fig_cmd->add_option("--td", fig_td, "time delta slice");
    fig_cmd->add_option("--layers", fig_layers, "hidden layer slice");
    fig_cmd->add_option("--granularity", fig_granularity, "granularity for confusion/day figures");
    fig_cmd->add_option("--seed", fig_seed, "seed for --fig day");
    fig_cmd->add_option("--train-days", fig_train_days, "training days for --fig day");
    fig_cmd->add_option("--manufacturers", fig_manufacturers, "manufacturer map or corpus JSON");
    fig_cmd->add_option("--out", fig_out, "CSV output path, - for stdout");

    // classify
    auto* cls_cmd = app.add_subcommand("classify", "Classify a streamed JSONL event feed");
    std::string cls_model, cls_in = "-", cls_out = "-";
    double cls_min_conf = 0.0;
    cls_cmd->add_option("--model", cls_model, "model bundle path")->required();
    cls_cmd->add_option("--in", cls_in, "event JSONL path, - for stdin");
    cls_cmd->add_option("--out", cls_out, "prediction JSONL path, - for stdout");
    cls_cmd->add_option("--min-confidence", cls_min_conf, "suppress predictions below this confidence");

    for (CLI::App* sub : app.get_subcommands({})) sub->set_help_flag("--help", "print help");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth_cmd->parsed())
            return cmd_synth(synth_corpus, synth_seed, synth_boots, synth_days, synth_drift, synth_out,
                             synth_emit_corpus);
        if (ingest_cmd->parsed()) return cmd_ingest(ingest_pcap, ingest_device, ingest_label, ingest_boot, ingest_out);
        if (bd_cmd->parsed())
            return cmd_build_dataset(bd_in, bd_h, bd_td, bd_granularity, bd_seed, bd_train_days, bd_manufacturers,
                                     bd_out);
        if (train_cmd->parsed())
            return cmd_train(train_in, train_h, train_td, train_layers, train_granularity, train_seed,
                             train_split_seed, split_seed_opt->count() > 0, train_manufacturers, train_model,
                             train_report);
        if (sweep_cmd->parsed())
            return cmd_sweep(sw_in, sw_space, sw_layers, sw_hashes, sw_tds, sw_granularity, sw_seeds, sw_out, sw_jobs,
                             sw_models, sw_manufacturers);
        if (fig_cmd->parsed())
            return cmd_figures(fig_name, fig_results, fig_traces, fig_h, fig_td, fig_layers, fig_granularity, fig_seed,
                               fig_train_days, fig_manufacturers, fig_out);
        if (cls_cmd->parsed()) return cmd_classify(cls_model, cls_in, cls_out, cls_min_conf);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
