// End-to-end checks of the command line surface: exit codes, file outputs
// and machine-clean data streams.
#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "dnsid/capture.hpp"
#include "dnsid/jsonl.hpp"
#include "pcap_fixtures.hpp"

namespace fs = std::filesystem;

namespace {

const char* kCli = DNSID_CLI_PATH;

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

struct CliDir {
    fs::path path;
    CliDir() : path(fs::temp_directory_path() / ("dnsid_cli_" + std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~CliDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run(const CliDir& dir, const std::string& args) {
    const std::string out_path = dir.file("stdout.txt");
    const std::string err_path = dir.file("stderr.txt");
    const std::string cmd = std::string(kCli) + " " + args + " >" + out_path + " 2>" + err_path;
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

std::size_t line_count(const std::string& text) {
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

} // namespace

TEST_CASE("cli: synth then sweep happy path exits 0") {
    CliDir dir;
    auto synth = run(dir, "synth --corpus default --seed 7 --boots 4 --out " + dir.file("corpus.jsonl"));
    REQUIRE(synth.exit_code == 0);
    CHECK(fs::exists(dir.file("corpus.jsonl")));

    auto sweep = run(dir, "sweep --in " + dir.file("corpus.jsonl") +
                              " --space small --h 8 --td 10 --seeds 1,2 --granularity product --out " +
                              dir.file("results.jsonl"));
    REQUIRE(sweep.exit_code == 0);
    const std::string log = slurp(dir.file("results.jsonl"));
    CHECK(line_count(log) == 1);
    nlohmann::json record = nlohmann::json::parse(log.substr(0, log.find('\n')));
    CHECK(record["h"] == 8);
    CHECK(record["per_seed_accuracy"].size() == 2);
}

TEST_CASE("cli: train emits a model bundle and a report") {
    CliDir dir;
    REQUIRE(run(dir, "synth --corpus default --seed 3 --boots 6 --out " + dir.file("c.jsonl")).exit_code == 0);
    auto train = run(dir, "train --in " + dir.file("c.jsonl") +
                              " --h 16 --td 30 --layers 2 --granularity manufacturer --seed 1 --out-model " +
                              dir.file("m.json") + " --out-report " + dir.file("r.json"));
    REQUIRE(train.exit_code == 0);

    nlohmann::json report = nlohmann::json::parse(slurp(dir.file("r.json")));
    CHECK(report.contains("epochs_run"));
    CHECK(report["test"].contains("accuracy"));
    CHECK(report["test"].contains("macro_f1"));

    nlohmann::json bundle = nlohmann::json::parse(slurp(dir.file("m.json")));
    CHECK(bundle["hash_algorithm"] == "fnv1a64");
    CHECK(bundle["granularity"] == "manufacturer");
    CHECK(bundle["classes"].size() == 27);
}

TEST_CASE("cli: classify stdout is machine-clean prediction JSONL") {
    CliDir dir;
    REQUIRE(run(dir, "synth --corpus default --seed 3 --boots 6 --out " + dir.file("c.jsonl")).exit_code == 0);
    REQUIRE(run(dir, "train --in " + dir.file("c.jsonl") + " --h 16 --td 30 --layers 2 --seed 1 --out-model " +
                         dir.file("m.json"))
                .exit_code == 0);

    auto classify = run(dir, "classify --model " + dir.file("m.json") + " --in " + dir.file("c.jsonl"));
    REQUIRE(classify.exit_code == 0);
    REQUIRE(!classify.out.empty());

    std::istringstream lines(classify.out);
    std::string line;
    std::size_t predictions = 0;
    while (std::getline(lines, line)) {
        nlohmann::json j = nlohmann::json::parse(line); // throws on any stray output
        for (const char* key : {"device_id", "label", "confidence", "events", "t"}) CHECK(j.contains(key));
        ++predictions;
    }
    CHECK(predictions == 30 * 6);

    // min-confidence 1.1 suppresses everything but still exits 0
    auto muted = run(dir, "classify --model " + dir.file("m.json") + " --min-confidence 1.1 --in " + dir.file("c.jsonl"));
    CHECK(muted.exit_code == 0);
    CHECK(muted.out.empty());
}

TEST_CASE("cli: build-dataset writes the documented header and rows") {
    CliDir dir;
    REQUIRE(run(dir, "synth --corpus default --seed 5 --boots 5 --out " + dir.file("c.jsonl")).exit_code == 0);
    auto bd = run(dir, "build-dataset --in " + dir.file("c.jsonl") + " --h 8 --td 20 --granularity product --seed 2 --out " +
                           dir.file("d.csv"));
    REQUIRE(bd.exit_code == 0);
    std::ifstream in(dir.file("d.csv"));
    std::string header;
    std::getline(in, header);
    nlohmann::json h = nlohmann::json::parse(header);
    CHECK(h["h"] == 8);
    CHECK(h["granularity"] == "product");
    CHECK(h["classes"].size() == 30);
    std::string row;
    std::size_t rows = 0;
    while (std::getline(in, row))
        if (!row.empty()) ++rows;
    CHECK(rows == 30 * 5);
}

TEST_CASE("cli: figures emits parseable CSV") {
    CliDir dir;
    REQUIRE(run(dir, "synth --corpus default --seed 7 --boots 4 --out " + dir.file("c.jsonl")).exit_code == 0);
    REQUIRE(run(dir, "sweep --in " + dir.file("c.jsonl") +
                         " --h 8 --td 5,10 --layers 2 --seeds 1 --granularity product --out " + dir.file("res.jsonl"))
                .exit_code == 0);
    auto fig = run(dir, "figures --fig time-delta --results " + dir.file("res.jsonl") + " --h 8 --layers 2");
    REQUIRE(fig.exit_code == 0);
    std::istringstream lines(fig.out);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "t_delta,granularity,mean_accuracy");
    CHECK(line_count(fig.out) == 3); // header + 2 slice points

    auto conf = run(dir, "figures --fig confusion --results " + dir.file("res.jsonl") +
                             " --h 8 --td 5 --layers 2 --granularity product --out " + dir.file("conf.csv"));
    REQUIRE(conf.exit_code == 0);
    std::string conf_csv = slurp(dir.file("conf.csv"));
    CHECK(conf_csv.rfind("predicted,", 0) == 0);
    CHECK(line_count(conf_csv) == 31); // header + 30 classes
}

TEST_CASE("cli: figures --fig day runs the temporal holdout") {
    CliDir dir;
    REQUIRE(run(dir, "synth --corpus stationary --boots 6 --days 4 --seed 2 --out " + dir.file("c.jsonl")).exit_code == 0);
    auto fig = run(dir, "figures --fig day --traces " + dir.file("c.jsonl") +
                            " --h 16 --td 10 --layers 1 --granularity product --seed 1 --train-days 2");
    REQUIRE(fig.exit_code == 0);
    std::istringstream lines(fig.out);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "day,accuracy,samples,scope");
    CHECK(line_count(fig.out) == 4); // header + in_range + 2 holdout days
}

TEST_CASE("cli: ingest parses a pcap into the JSONL schema") {
    CliDir dir;
    const std::string mac = "aa:bb:cc:dd:ee:ff";
    fixtures::Bytes img = fixtures::pcap_image({
        {100, 0, fixtures::discover_frame(mac)},
        {100, 500000, fixtures::dns_query_frame(mac, "time1.google.com")},
        {101, 0, fixtures::dns_query_frame(mac, "example.com")},
    });
    {
        std::ofstream f(dir.file("boot.pcap"), std::ios::binary);
        f.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
    }
    auto ingest = run(dir, "ingest --pcap " + dir.file("boot.pcap") + " --device-id " + mac +
                               " --label \"Echo Spot\" --boot-id b1 --out -");
    REQUIRE(ingest.exit_code == 0);
    auto traces = dnsid::capture::read_jsonl_string(ingest.out);
    REQUIRE(traces.size() == 1);
    CHECK(traces[0].label == "Echo Spot");
    CHECK(traces[0].dhcp_t == 100.0);
    REQUIRE(traces[0].events.size() == 2);
    CHECK(traces[0].events[0].qname == "time1.google.com");
}

TEST_CASE("cli: exit code contract") {
    CliDir dir;
    CHECK(run(dir, "--help").exit_code == 0);
    CHECK(run(dir, "synth --help").exit_code == 0);
    CHECK(run(dir, "frobnicate").exit_code == 1);                       // unknown subcommand
    CHECK(run(dir, "synth --corpus default").exit_code == 1);           // missing required --out
    CHECK(run(dir, "train --in " + dir.file("absent.jsonl")).exit_code == 2); // unreadable input
    // malformed trace file: schema error is a data error
    {
        std::ofstream f(dir.file("bad.jsonl"));
        f << "{\"kind\":\"dns\"}\n";
    }
    CHECK(run(dir, "train --in " + dir.file("bad.jsonl")).exit_code == 2);
    // figures over a missing slice
    {
        std::ofstream f(dir.file("empty.jsonl"));
    }
    CHECK(run(dir, "figures --fig time-delta --results " + dir.file("empty.jsonl")).exit_code == 2);
}

TEST_CASE("cli: sweep resumes from its results log") {
    CliDir dir;
    REQUIRE(run(dir, "synth --corpus default --seed 7 --boots 4 --out " + dir.file("c.jsonl")).exit_code == 0);
    const std::string sweep_args = "sweep --in " + dir.file("c.jsonl") +
                                   " --h 8 --td 5 --layers 1,2 --seeds 1 --granularity product --out " +
                                   dir.file("res.jsonl");
    REQUIRE(run(dir, sweep_args).exit_code == 0);
    const std::string first = slurp(dir.file("res.jsonl"));
    CHECK(line_count(first) == 2);
    // rerunning appends nothing: all points are already recorded
    REQUIRE(run(dir, sweep_args).exit_code == 0);
    CHECK(slurp(dir.file("res.jsonl")) == first);
}
