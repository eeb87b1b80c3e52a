#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dnsid/capture.hpp"

namespace dnsid::capture {

struct SchemaError : std::runtime_error {
    std::size_t line;
    SchemaError(std::size_t line_no, const std::string& what)
        : std::runtime_error("line " + std::to_string(line_no) + ": " + what), line(line_no) {}
};

namespace detail {

inline std::string lower_no_dot(std::string s) {
    for (char& c : s) c = ascii_lower(c);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

inline double require_number(const nlohmann::json& j, const char* field, std::size_t line_no) {
    auto it = j.find(field);
    if (it == j.end() || !it->is_number()) throw SchemaError(line_no, std::string("missing or non-numeric \"") + field + "\"");
    return it->get<double>();
}

inline std::string require_string(const nlohmann::json& j, const char* field, std::size_t line_no) {
    auto it = j.find(field);
    if (it == j.end() || !it->is_string()) throw SchemaError(line_no, std::string("missing or non-string \"") + field + "\"");
    return it->get<std::string>();
}

} // namespace detail

// One record per line. Anchor record:
//   {"kind":"dhcp","label":str,"boot_id":str,"device_id":str,"t":float}
// Event record:
//   {"kind":"dns","label":str,"boot_id":str,"device_id":str,"qname":str,"t":float}
// Traces come back grouped by (label, boot_id) in first-appearance order,
// events sorted by t. read_jsonl(write_jsonl(x)) == x for valid x.
inline std::vector<BootTrace> read_jsonl(std::istream& in) {
    struct Group {
        BootTrace trace;
        bool have_anchor = false;
        std::size_t first_line = 0;
    };
    std::vector<std::pair<std::string, std::string>> order;
    std::map<std::pair<std::string, std::string>, Group> groups;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw SchemaError(line_no, "not a JSON object");

        std::string kind = detail::require_string(j, "kind", line_no);
        std::string label = detail::require_string(j, "label", line_no);
        std::string boot_id = detail::require_string(j, "boot_id", line_no);
        std::string device_id = detail::require_string(j, "device_id", line_no);
        double t = detail::require_number(j, "t", line_no);

        auto key = std::make_pair(label, boot_id);
        auto [it, inserted] = groups.try_emplace(key);
        Group& g = it->second;
        if (inserted) {
            order.push_back(key);
            g.first_line = line_no;
            g.trace.label = label;
            g.trace.boot_id = boot_id;
            g.trace.device_id = device_id;
        }

        if (kind == "dhcp") {
            if (g.have_anchor) throw SchemaError(line_no, "duplicate dhcp anchor for boot \"" + boot_id + "\"");
            g.have_anchor = true;
            g.trace.dhcp_t = t;
            g.trace.device_id = device_id;
        } else if (kind == "dns") {
            std::string qname = detail::lower_no_dot(detail::require_string(j, "qname", line_no));
            if (qname.empty()) throw SchemaError(line_no, "empty qname");
            if (t < 0 || !std::isfinite(t)) throw SchemaError(line_no, "invalid t");
            g.trace.events.push_back(DnsEvent{device_id, std::move(qname), t});
        } else {
            throw SchemaError(line_no, "unknown kind \"" + kind + "\"");
        }
    }

    std::vector<BootTrace> traces;
    traces.reserve(order.size());
    for (const auto& key : order) {
        Group& g = groups[key];
        if (!g.have_anchor) throw SchemaError(g.first_line, "boot \"" + key.second + "\" has no dhcp anchor");
        std::stable_sort(g.trace.events.begin(), g.trace.events.end(),
                         [](const DnsEvent& a, const DnsEvent& b) { return a.t < b.t; });
        for (const DnsEvent& e : g.trace.events) {
            if (e.t <= g.trace.dhcp_t)
                throw SchemaError(g.first_line, "boot \"" + key.second + "\" has an event at or before its anchor");
        }
        traces.push_back(std::move(g.trace));
    }
    return traces;
}

inline void write_jsonl(const std::vector<BootTrace>& traces, std::ostream& out) {
    for (const BootTrace& tr : traces) {
        nlohmann::json anchor{{"kind", "dhcp"},
                              {"label", tr.label},
                              {"boot_id", tr.boot_id},
                              {"device_id", tr.device_id},
                              {"t", tr.dhcp_t}};
        out << anchor.dump() << '\n';
        for (const DnsEvent& e : tr.events) {
            nlohmann::json rec{{"kind", "dns"},
                               {"label", tr.label},
                               {"boot_id", tr.boot_id},
                               {"device_id", e.device_id},
                               {"qname", e.qname},
                               {"t", e.t}};
            out << rec.dump() << '\n';
        }
    }
}

inline std::vector<BootTrace> read_jsonl_string(const std::string& text) {
    std::istringstream in(text);
    return read_jsonl(in);
}

inline std::string write_jsonl_string(const std::vector<BootTrace>& traces) {
    std::ostringstream out;
    write_jsonl(traces, out);
    return out.str();
}

inline std::vector<BootTrace> read_jsonl_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_jsonl(in);
}

inline void write_jsonl_file(const std::vector<BootTrace>& traces, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    write_jsonl(traces, out);
}

} // namespace dnsid::capture
