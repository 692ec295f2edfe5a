#include "loratdma/trace_export.hpp"

#include "loratdma/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace loratdma {

namespace {

TimeWindow summary_window(const SimulationTrace& trace)
{
    return steady_state_window(trace).value_or(TimeWindow{0.0, trace.end_time});
}

double max_abs(const std::vector<double>& values)
{
    double out = 0.0;
    for (double v : values) {
        out = std::max(out, std::abs(v));
    }
    return out;
}

std::string parent_label(const NodeSummary& s)
{
    return s.parent ? std::to_string(to_int(*s.parent)) : std::string("-");
}

std::uint64_t tx_count(const SimulationTrace& trace, NodeId node)
{
    return static_cast<std::uint64_t>(std::count_if(trace.transmissions.begin(), trace.transmissions.end(),
                                                    [&](const Transmission& t) { return t.sender == node; }));
}

}  // namespace

std::string_view to_string(PacketEventKind kind)
{
    switch (kind) {
    case PacketEventKind::Tx: return "tx";
    case PacketEventKind::Rx: return "rx";
    case PacketEventKind::Collision: return "collision";
    case PacketEventKind::ChannelError: return "channel_error";
    case PacketEventKind::Drop: return "drop";
    case PacketEventKind::Gateway: return "gateway";
    case PacketEventKind::ProtocolError: return "protocol_error";
    case PacketEventKind::BeaconMiss: return "beacon_miss";
    }
    return "unknown";
}

void write_radio_csv(std::ostream& out, const SimulationTrace& trace)
{
    out << "node,state,start_s,end_s\n";
    for (const auto& iv : trace.radio) {
        fmt::print(out, "{},{},{:.9f},{:.9f}\n", to_int(iv.node), phy::to_string(iv.state), iv.start, iv.end);
    }
}

void write_packets_csv(std::ostream& out, const SimulationTrace& trace)
{
    out << "time_s,event,node,peer,kind,dest,origin,seq,size,airtime_s,channel\n";
    for (const auto& ev : trace.packet_events) {
        const bool has_packet = ev.size > 0;
        if (has_packet) {
            fmt::print(out, "{:.9f},{},{},{},{},{},{},{},{},{:.9f},{}\n", ev.time, to_string(ev.kind),
                       to_int(ev.node), to_int(ev.peer), to_string(ev.packet_kind), to_int(ev.dest),
                       to_int(ev.origin), ev.seq, ev.size, ev.airtime, ev.channel);
        } else {
            fmt::print(out, "{:.9f},{},{},,,,,,,,\n", ev.time, to_string(ev.kind), to_int(ev.node));
        }
    }
}

void write_sync_csv(std::ostream& out, const SimulationTrace& trace)
{
    out << "frame,parent,child,epsilon_us\n";
    for (const auto& s : trace.sync_samples) {
        fmt::print(out, "{},{},{},{:.6f}\n", s.frame, to_int(s.parent), to_int(s.child), s.epsilon * 1e6);
    }
}

void write_summary_csv(std::ostream& out, const SimulationTrace& trace, const PowerProfile& power)
{
    const TimeWindow window = summary_window(trace);
    out << "node,role,parent,mode,duty_pct,duty_lorawan_pct,duty_multihop_pct,avg_power_mw,drops,tx_count,"
           "beacon_misses,desyncs,max_abs_sync_us\n";
    for (const auto& [id, s] : trace.summary) {
        const DutyCycle duty = measure_duty_cycle(trace, id, window);
        const double power_w = measure_avg_power(trace, id, power, window);
        const double sync = s.parent ? max_abs(measure_sync_error(trace, *s.parent, id)) : 0.0;
        fmt::print(out, "{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{},{},{},{},{:.6f}\n", to_int(id),
                   s.is_relay ? "relay" : "node", parent_label(s), protocol::to_string(s.final_mode),
                   duty.total * 100.0, duty.lorawan * 100.0, duty.multihop * 100.0, power_w * 1e3, s.counters.drops,
                   tx_count(trace, id), s.counters.beacon_misses, s.counters.desyncs, sync * 1e6);
    }
}

std::string format_report(const SimulationTrace& trace, const PowerProfile& power)
{
    const TimeWindow window = summary_window(trace);
    const auto steady = steady_state_window(trace);
    std::string out;
    out += fmt::format("simulated {:.3f} s ({} frames of {:.6f} s)\n", trace.end_time,
                       static_cast<long long>(std::llround(trace.end_time / trace.frame_duration)),
                       trace.frame_duration);
    if (const auto synced = all_synchronized_frame(trace)) {
        out += fmt::format("all nodes synchronized from frame {}\n", *synced);
    } else {
        out += "network did not settle: some node is not synchronized at the end\n";
    }
    out += fmt::format("measurement window: {:.3f} s starting at {:.3f} s{}\n\n", window.length, window.start,
                       steady ? "" : " (whole trace)");

    out += fmt::format("{:>5} {:>6} {:>6} {:>14} {:>10} {:>10} {:>12} {:>6}\n", "node", "role", "parent", "mode",
                       "duty_%", "lorawan_%", "power_mW", "drops");
    for (const auto& [id, s] : trace.summary) {
        const DutyCycle duty = measure_duty_cycle(trace, id, window);
        out += fmt::format("{:>5} {:>6} {:>6} {:>14} {:>10.4f} {:>10.4f} {:>12.6f} {:>6}\n", to_int(id),
                           s.is_relay ? "relay" : "node", parent_label(s), protocol::to_string(s.final_mode),
                           duty.total * 100.0, duty.lorawan * 100.0,
                           measure_avg_power(trace, id, power, window) * 1e3, s.counters.drops);
    }

    out += "\nmax |sync error| per parent-child pair\n";
    std::map<std::pair<NodeId, NodeId>, double> pairs;
    for (const auto& sample : trace.sync_samples) {
        auto& v = pairs[{sample.parent, sample.child}];
        v = std::max(v, std::abs(sample.epsilon));
    }
    for (const auto& [pair, value] : pairs) {
        out += fmt::format("  {} -> {}: {:.3f} us\n", to_int(pair.first), to_int(pair.second), value * 1e6);
    }
    out += "max |sync error| against the relay\n";
    for (const auto& [id, s] : trace.summary) {
        if (s.is_relay) {
            continue;
        }
        const auto series = measure_sync_error(trace, trace.relay, id);
        if (!series.empty()) {
            out += fmt::format("  {} -> {}: {:.3f} us\n", to_int(trace.relay), to_int(id), max_abs(series) * 1e6);
        }
    }
    return out;
}

std::vector<std::filesystem::path> export_trace(const SimulationTrace& trace, const PowerProfile& power,
                                                const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    const auto write = [&](const char* name, auto&& body) {
        const auto path = dir / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + path.string());
        }
        body(out);
        if (!out) {
            throw std::runtime_error("failed writing " + path.string());
        }
        written.push_back(path);
    };
    write("radio.csv", [&](std::ostream& o) { write_radio_csv(o, trace); });
    write("packets.csv", [&](std::ostream& o) { write_packets_csv(o, trace); });
    write("sync.csv", [&](std::ostream& o) { write_sync_csv(o, trace); });
    write("summary.csv", [&](std::ostream& o) { write_summary_csv(o, trace, power); });
    write("report.txt", [&](std::ostream& o) { o << format_report(trace, power); });
    return written;
}

}  // namespace loratdma
