#include "loratdma/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace loratdma {

namespace {

const ClockAnchor* anchor_at(const SimulationTrace& trace, NodeId node, double time)
{
    const ClockAnchor* found = nullptr;
    for (const auto& anchor : trace.clock_anchors) {
        if (anchor.time > time) {
            break;
        }
        if (anchor.node == node) {
            found = &anchor;
        }
    }
    return found;
}

double overlap(double a0, double a1, double b0, double b1)
{
    return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace

std::vector<SyncPoint> sync_series(const SimulationTrace& trace, NodeId a, NodeId b)
{
    std::vector<SyncPoint> out;
    for (const auto& sample : trace.sync_samples) {
        if (sample.child != b) {
            continue;
        }
        if (sample.parent == a) {
            out.push_back({sample.frame, sample.epsilon});
            continue;
        }
        const ClockAnchor* ca = anchor_at(trace, a, sample.time);
        const ClockAnchor* cb = anchor_at(trace, b, sample.time);
        if (ca == nullptr || cb == nullptr) {
            continue;
        }
        out.push_back({sample.frame, timebase::offset_from(ca->clock, sample.tick, 0.0) -
                                         timebase::offset_from(cb->clock, sample.tick, 0.0)});
    }
    return out;
}

std::vector<double> measure_sync_error(const SimulationTrace& trace, NodeId parent, NodeId child)
{
    std::vector<double> out;
    for (const auto& p : sync_series(trace, parent, child)) {
        out.push_back(p.epsilon);
    }
    return out;
}

DutyCycle measure_duty_cycle(const SimulationTrace& trace, NodeId node, TimeWindow window,
                             std::optional<int> channel)
{
    DutyCycle duty;
    if (window.length <= 0.0) {
        return duty;
    }
    for (const auto& tx : trace.transmissions) {
        if (tx.sender != node || (channel && tx.channel != *channel)) {
            continue;
        }
        const double t = overlap(tx.start(), tx.end(), window.start, window.end());
        (tx.lorawan ? duty.lorawan : duty.multihop) += t;
    }
    duty.lorawan /= window.length;
    duty.multihop /= window.length;
    duty.total = duty.lorawan + duty.multihop;
    return duty;
}

double measure_avg_power(const SimulationTrace& trace, NodeId node, const PowerProfile& profile,
                         std::optional<TimeWindow> window)
{
    const TimeWindow w = window.value_or(TimeWindow{0.0, trace.end_time});
    if (w.length <= 0.0) {
        return profile.p_sleep;
    }
    double energy = 0.0;
    double covered = 0.0;
    for (const auto& iv : trace.radio) {
        if (iv.node != node) {
            continue;
        }
        const double t = overlap(iv.start, iv.end, w.start, w.end());
        energy += profile.state_power(iv.state) * t;
        covered += t;
    }
    // Time not covered by the trace is spent asleep.
    energy += profile.p_sleep * std::max(0.0, w.length - covered);
    for (const auto& run : trace.app_runs) {
        if (run.node == node && run.start >= w.start && run.start < w.end()) {
            energy += (profile.p_app - profile.p_sleep) * run.duration;
        }
    }
    return energy / w.length;
}

std::optional<std::int64_t> all_synchronized_frame(const SimulationTrace& trace)
{
    for (const auto& [id, summary] : trace.summary) {
        if (summary.final_mode != protocol::NodeMode::Synchronized) {
            return std::nullopt;
        }
    }
    double last_change = 0.0;
    for (const auto& ev : trace.mode_events) {
        last_change = std::max(last_change, ev.time);
    }
    for (const auto& fs : trace.frame_starts) {
        if (fs.time >= last_change) {
            return fs.frame;
        }
    }
    return std::nullopt;
}

std::optional<double> frame_start_time(const SimulationTrace& trace, std::int64_t frame)
{
    for (const auto& fs : trace.frame_starts) {
        if (fs.frame == frame) {
            return fs.time;
        }
    }
    return std::nullopt;
}

std::optional<TimeWindow> steady_state_window(const SimulationTrace& trace)
{
    const auto synced = all_synchronized_frame(trace);
    if (!synced) {
        return std::nullopt;
    }
    const std::int64_t k = std::max(1, trace.k);
    const std::int64_t first = ((*synced + 1 + k - 1) / k) * k;
    const auto start = frame_start_time(trace, first);
    if (!start) {
        return std::nullopt;
    }
    const double period = static_cast<double>(k) * trace.frame_duration;
    const auto periods = static_cast<std::int64_t>(std::floor((trace.end_time - *start) / period + 1e-9));
    if (periods < 1) {
        return std::nullopt;
    }
    return TimeWindow{*start, static_cast<double>(periods) * period};
}

std::vector<std::size_t> uplink_queue_depths(const SimulationTrace& trace, NodeId node, std::int64_t from_frame,
                                             std::int64_t every)
{
    std::vector<std::size_t> out;
    for (const auto& q : trace.queue_samples) {
        if (q.node == node && q.frame >= from_frame && (q.frame - from_frame) % std::max<std::int64_t>(1, every) == 0) {
            out.push_back(q.uplink);
        }
    }
    return out;
}

}  // namespace loratdma
