#pragma once

#include "loratdma/packet.hpp"
#include "loratdma/phy.hpp"

#include <optional>
#include <vector>

namespace loratdma {

enum class SlotKind : std::uint8_t { Beacon, LoRaWan, Uplink, Downlink, Join, Idle };

// Role of a slot in the frame template. owner_index is the slot-triple index
// for Beacon/Uplink/Downlink slots and -1 otherwise.
struct SlotTemplate {
    SlotKind kind = SlotKind::Idle;
    int owner_index = -1;
};

// Indices of the three slots owned by one node.
struct SlotTriple {
    int beacon = -1;
    int uplink = -1;
    int downlink = -1;

    bool operator==(const SlotTriple&) const = default;
};

// Frame layout: [M beacon][1 LoRaWAN][M uplink][M downlink][1 join][idle...].
struct FrameSchedule {
    int slots_per_frame = 0;
    int ticks_per_slot = 0;
    int max_nodes = 0;
    std::vector<SlotTemplate> layout;

    [[nodiscard]] SlotTriple triple(int index) const;
    [[nodiscard]] int lorawan_slot() const { return max_nodes; }
    [[nodiscard]] int join_slot() const { return 3 * max_nodes + 1; }
    [[nodiscard]] int idle_slots() const { return slots_per_frame - (3 * max_nodes + 2); }
    [[nodiscard]] std::int64_t ticks_per_frame() const
    {
        return static_cast<std::int64_t>(slots_per_frame) * ticks_per_slot;
    }
};

// Throws std::invalid_argument when slots_per_frame < 3 * max_nodes + 2.
FrameSchedule build_schedule(int max_nodes, int slots_per_frame, int ticks_per_slot);

double frame_time(const FrameSchedule& schedule, double tick_rate_hz);
double slot_time(const FrameSchedule& schedule, double tick_rate_hz);

// Sub-slot timing shared by every node.
struct SlotTiming {
    double t_offset = 0.030;
    double t_guard = 0.010;
    double t_data_max = 0.390144;
    double t_ack = 0.103424;
    double t_bcn = 0.103424;
};

// Offsets and guard from the defaults, airtimes derived from the radio.
SlotTiming default_timing(const phy::RadioParams& radio);

// Throws std::invalid_argument if a data exchange does not fit in one slot.
void validate(const SlotTiming& timing, double slot_duration);

// Per-node view of one slot.
struct SlotRole {
    enum class Kind : std::uint8_t {
        BeaconTx,
        BeaconRx,
        LoRaWanUplink,
        UplinkExchange,
        DownlinkExchange,
        JoinContention,
        Idle,
    };

    Kind kind = Kind::Idle;
    std::optional<NodeId> owner;

    bool operator==(const SlotRole&) const = default;
};

}  // namespace loratdma
