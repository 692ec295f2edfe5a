#include "loratdma/schedule.hpp"

#include <stdexcept>
#include <string>

namespace loratdma {

SlotTriple FrameSchedule::triple(int index) const
{
    if (index < 0 || index >= max_nodes) {
        throw std::out_of_range("slot triple index " + std::to_string(index) + " outside 0.." +
                                std::to_string(max_nodes - 1));
    }
    return SlotTriple{index, max_nodes + 1 + index, 2 * max_nodes + 1 + index};
}

FrameSchedule build_schedule(int max_nodes, int slots_per_frame, int ticks_per_slot)
{
    if (max_nodes < 1) {
        throw std::invalid_argument("schedule needs room for at least one node");
    }
    if (ticks_per_slot < 1) {
        throw std::invalid_argument("slot must last at least one tick");
    }
    const int required = 3 * max_nodes + 2;
    if (slots_per_frame < required) {
        throw std::invalid_argument("frame of " + std::to_string(slots_per_frame) +
                                    " slots is too short for " + std::to_string(max_nodes) +
                                    " nodes: need N >= 3M+2 = " + std::to_string(required));
    }
    if (slots_per_frame > 256) {
        throw std::invalid_argument("slot indices must fit in one byte");
    }

    FrameSchedule s;
    s.slots_per_frame = slots_per_frame;
    s.ticks_per_slot = ticks_per_slot;
    s.max_nodes = max_nodes;
    s.layout.reserve(static_cast<std::size_t>(slots_per_frame));
    for (int i = 0; i < max_nodes; ++i) {
        s.layout.push_back({SlotKind::Beacon, i});
    }
    s.layout.push_back({SlotKind::LoRaWan, -1});
    for (int i = 0; i < max_nodes; ++i) {
        s.layout.push_back({SlotKind::Uplink, i});
    }
    for (int i = 0; i < max_nodes; ++i) {
        s.layout.push_back({SlotKind::Downlink, i});
    }
    s.layout.push_back({SlotKind::Join, -1});
    while (static_cast<int>(s.layout.size()) < slots_per_frame) {
        s.layout.push_back({SlotKind::Idle, -1});
    }
    return s;
}

double slot_time(const FrameSchedule& schedule, double tick_rate_hz)
{
    return schedule.ticks_per_slot / tick_rate_hz;
}

double frame_time(const FrameSchedule& schedule, double tick_rate_hz)
{
    return static_cast<double>(schedule.ticks_per_frame()) / tick_rate_hz;
}

SlotTiming default_timing(const phy::RadioParams& radio)
{
    SlotTiming t;
    t.t_data_max = phy::time_on_air(kMaxFrameBytes, radio).seconds;
    t.t_ack = phy::time_on_air(kAckBytes, radio).seconds;
    t.t_bcn = phy::time_on_air(kBeaconBytes, radio).seconds;
    return t;
}

void validate(const SlotTiming& timing, double slot_duration)
{
    if (!(timing.t_offset > 0 && timing.t_guard > 0 && timing.t_data_max > 0 && timing.t_ack > 0 &&
          timing.t_bcn > 0)) {
        throw std::invalid_argument("slot timing values must all be positive");
    }
    const double exchange =
        timing.t_offset + timing.t_guard + timing.t_data_max + timing.t_offset + timing.t_ack;
    if (exchange > slot_duration) {
        throw std::invalid_argument("data exchange of " + std::to_string(exchange * 1e3) +
                                    " ms does not fit a slot of " +
                                    std::to_string(slot_duration * 1e3) + " ms");
    }
}

}  // namespace loratdma
