#pragma once

#include "loratdma/channel.hpp"
#include "loratdma/packet.hpp"
#include "loratdma/phy.hpp"
#include "loratdma/protocol.hpp"
#include "loratdma/timebase.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

namespace loratdma {

struct RadioInterval {
    NodeId node{};
    phy::RadioState state = phy::RadioState::Sleep;
    double start = 0.0;
    double end = 0.0;
};

struct AppRun {
    NodeId node{};
    double start = 0.0;
    double duration = 0.0;
};

enum class PacketEventKind : std::uint8_t {
    Tx,
    Rx,
    Collision,
    ChannelError,
    Drop,
    Gateway,
    ProtocolError,
    BeaconMiss,
};

std::string_view to_string(PacketEventKind kind);

struct PacketEvent {
    double time = 0.0;
    PacketEventKind kind = PacketEventKind::Tx;
    NodeId node{};
    NodeId peer{};
    PacketKind packet_kind = PacketKind::Beacon;
    NodeId dest{};
    NodeId origin{};
    std::uint8_t seq = 0;
    int size = 0;
    double airtime = 0.0;
    int channel = 0;
};

// Child resynchronized on its parent's beacon. `tick` is the local tick at
// which the beacon ends; epsilon is parent minus child global time at it.
struct SyncSample {
    std::int64_t frame = 0;
    NodeId parent{};
    NodeId child{};
    std::int64_t tick = 0;
    double time = 0.0;
    double epsilon = 0.0;
};

// Clock state of a node from `time` onward, until its next anchor.
struct ClockAnchor {
    NodeId node{};
    double time = 0.0;
    timebase::VirtualClock clock;
};

struct QueueSample {
    std::int64_t frame = 0;
    double time = 0.0;
    NodeId node{};
    std::size_t uplink = 0;
    std::size_t downlink = 0;
};

struct ModeEvent {
    double time = 0.0;
    NodeId node{};
    protocol::NodeMode mode = protocol::NodeMode::Unjoined;
};

struct FrameStart {
    std::int64_t frame = 0;
    double time = 0.0;
};

struct NodeSummary {
    bool is_relay = false;
    protocol::NodeMode final_mode = protocol::NodeMode::Unjoined;
    std::optional<NodeId> parent;
    protocol::NodeCounters counters;
};

struct SimulationTrace {
    NodeId relay{};
    std::vector<NodeId> nodes;
    double frame_duration = 0.0;
    double end_time = 0.0;
    int k = 1;

    std::vector<RadioInterval> radio;
    std::vector<AppRun> app_runs;
    std::vector<Transmission> transmissions;
    std::vector<PacketEvent> packet_events;
    std::vector<SyncSample> sync_samples;
    std::vector<ClockAnchor> clock_anchors;
    std::vector<QueueSample> queue_samples;
    std::vector<ModeEvent> mode_events;
    // Frame boundaries on the relay's clock.
    std::vector<FrameStart> frame_starts;
    std::map<NodeId, NodeSummary> summary;
};

}  // namespace loratdma
