#pragma once

#include "loratdma/power.hpp"
#include "loratdma/trace.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace loratdma {

struct TimeWindow {
    double start = 0.0;
    double length = 0.0;

    [[nodiscard]] double end() const { return start + length; }
};

struct SyncPoint {
    std::int64_t frame = 0;
    double epsilon = 0.0;
};

// epsilon = a's global time minus b's global time at each tick where b
// resynchronized to its parent. a need not be b's parent.
std::vector<SyncPoint> sync_series(const SimulationTrace& trace, NodeId a, NodeId b);

// Sync error samples in seconds for the pair (a, b), see sync_series.
std::vector<double> measure_sync_error(const SimulationTrace& trace, NodeId parent, NodeId child);

struct DutyCycle {
    double total = 0.0;
    double lorawan = 0.0;
    double multihop = 0.0;
};

// Fraction of the window the node spends transmitting on `channel` (all
// channels when empty), split into LoRaWAN and multi-hop traffic.
DutyCycle measure_duty_cycle(const SimulationTrace& trace, NodeId node, TimeWindow window,
                             std::optional<int> channel = std::nullopt);

// Time-weighted mean power over the window (whole trace when empty): radio
// state power plus (p_app - p_sleep) for every application run that starts
// inside the window.
double measure_avg_power(const SimulationTrace& trace, NodeId node, const PowerProfile& profile,
                         std::optional<TimeWindow> window = std::nullopt);

// First relay frame from which every node stays synchronized until the end
// of the trace.
std::optional<std::int64_t> all_synchronized_frame(const SimulationTrace& trace);

// Start time of relay frame `frame`.
std::optional<double> frame_start_time(const SimulationTrace& trace, std::int64_t frame);

// The first k-aligned frame strictly after all nodes are synchronized,
// extended over as many whole k-frame periods as the trace holds.
std::optional<TimeWindow> steady_state_window(const SimulationTrace& trace);

// Relay-frame-start queue depths of `node` from `from_frame` on, every
// `every` frames.
std::vector<std::size_t> uplink_queue_depths(const SimulationTrace& trace, NodeId node, std::int64_t from_frame,
                                             std::int64_t every);

}  // namespace loratdma
