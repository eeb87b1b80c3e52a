#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dnsid/capture.hpp"
#include "dnsid/dataset.hpp"
#include "dnsid/featurize.hpp"
#include "dnsid/mlp.hpp"
#include "dnsid/sweep.hpp"

namespace dnsid::runtime {

struct Prediction {
    std::string device_id;
    std::string label;
    double confidence = 0.0; // softmax probability of the argmax class
    std::size_t window_event_count = 0;
    double emitted_at = 0.0; // dhcp_t + t_delta

    bool operator==(const Prediction&) const = default;
};

// One element of the ordered per-device stream.
struct StreamEvent {
    enum class Kind { dhcp_anchor, dns_query };
    Kind kind = Kind::dns_query;
    std::string device_id;
    double t = 0.0;
    std::string qname; // dns_query only

    static StreamEvent anchor(std::string device_id, double t) {
        return StreamEvent{Kind::dhcp_anchor, std::move(device_id), t, {}};
    }
    static StreamEvent query(std::string device_id, double t, std::string qname) {
        return StreamEvent{Kind::dns_query, std::move(device_id), t, std::move(qname)};
    }
};

namespace detail {

inline Prediction predict_window(const sweep::ModelBundle& bundle, const std::string& device_id, double dhcp_t,
                                 const std::vector<capture::DnsEvent>& events) {
    capture::BootTrace trace;
    trace.device_id = device_id;
    trace.dhcp_t = dhcp_t;
    trace.events = events;
    featurize::FrequencyVector fv =
        featurize::featurize(trace, featurize::HashResolution(bundle.h), featurize::TimeDelta(bundle.t_delta));
    std::vector<double> probs = mlp::forward(bundle.net, dataset::apply_scaler(fv, bundle.scaler));
    std::size_t best = mlp::detail::argmax_row(probs.data(), probs.size());

    std::size_t count = 0;
    for (const auto& e : events)
        if (e.t > dhcp_t && e.t <= dhcp_t + bundle.t_delta) ++count;

    Prediction p;
    p.device_id = device_id;
    p.label = bundle.labels.classes.at(best);
    p.confidence = probs[best];
    p.window_event_count = count;
    p.emitted_at = dhcp_t + bundle.t_delta;
    return p;
}

} // namespace detail

// Batch-mode classification of a complete trace; the stream/batch
// equivalence oracle for SessionStore.
inline Prediction classify_trace(const sweep::ModelBundle& bundle, const capture::BootTrace& trace) {
    return detail::predict_window(bundle, trace.device_id, trace.dhcp_t,
                                  featurize::window(trace, featurize::TimeDelta(bundle.t_delta)));
}

// Single-writer state machine over an ordered event stream. A DHCP anchor
// opens (or restarts) a collecting session for its device; queries inside
// the window buffer; the first sight of time past the window closes it and
// emits exactly one Prediction. Per-device sessions are independent.
class SessionStore {
public:
    explicit SessionStore(const sweep::ModelBundle& bundle) : bundle_(bundle) {}

    // Feeds one event. Returns the device's Prediction when this event
    // closes its window. A time regression within a device aborts that
    // device's session (counted, never thrown).
    std::optional<Prediction> ingest(const StreamEvent& ev) {
        auto it = sessions_.find(ev.device_id);
        if (it != sessions_.end() && ev.t < it->second.last_t) {
            ++out_of_order_events_;
            sessions_.erase(it);
            return std::nullopt;
        }

        std::optional<Prediction> emitted;
        if (it != sessions_.end()) {
            Session& s = it->second;
            s.last_t = ev.t;
            if (s.state == State::collecting && ev.t > s.dhcp_t + bundle_.t_delta) {
                emitted = close(ev.device_id, s);
            }
        }

        if (ev.kind == StreamEvent::Kind::dhcp_anchor) {
            Session fresh;
            fresh.dhcp_t = ev.t;
            fresh.last_t = ev.t;
            fresh.state = State::collecting;
            sessions_[ev.device_id] = std::move(fresh); // restart on reboot mid-window
            return emitted;
        }

        it = sessions_.find(ev.device_id);
        if (it == sessions_.end()) return emitted; // query with no anchor yet
        Session& s = it->second;
        if (s.state == State::collecting && ev.t > s.dhcp_t && ev.t <= s.dhcp_t + bundle_.t_delta) {
            s.events.push_back(capture::DnsEvent{ev.device_id, ev.qname, ev.t});
        }
        return emitted;
    }

    // Advances the wall clock (ticks come from the caller, keeping the
    // store deterministic). Closes every collecting session whose window
    // ended before `t`.
    std::vector<Prediction> tick(double t) {
        std::vector<Prediction> out;
        for (auto& [device_id, s] : sessions_) {
            if (s.state == State::collecting && t > s.dhcp_t + bundle_.t_delta) out.push_back(close(device_id, s));
        }
        return out;
    }

    // End of stream: every still-collecting session emits.
    std::vector<Prediction> flush() {
        std::vector<Prediction> out;
        for (auto& [device_id, s] : sessions_) {
            if (s.state == State::collecting) out.push_back(close(device_id, s));
        }
        return out;
    }

    std::size_t out_of_order_events() const { return out_of_order_events_; }

private:
    enum class State { collecting, decided };

    struct Session {
        double dhcp_t = 0.0;
        double last_t = 0.0;
        State state = State::collecting;
        std::vector<capture::DnsEvent> events;
    };

    Prediction close(const std::string& device_id, Session& s) {
        s.state = State::decided;
        Prediction p = detail::predict_window(bundle_, device_id, s.dhcp_t, s.events);
        s.events.clear();
        return p;
    }

    const sweep::ModelBundle& bundle_;
    std::map<std::string, Session> sessions_;
    std::size_t out_of_order_events_ = 0;
};

} // namespace dnsid::runtime
