#pragma once

#include "loratdma/packet.hpp"
#include "loratdma/phy.hpp"
#include "loratdma/rng.hpp"
#include "loratdma/schedule.hpp"
#include "loratdma/timebase.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace loratdma::protocol {

enum class NodeMode : std::uint8_t { Unjoined, Joining, Synchronized, Desynchronized };

std::string_view to_string(NodeMode mode);

struct JoinConfig {
    // Frames an unjoined node keeps listening after its first beacon before
    // it picks a parent.
    int listen_frames = 1;
    // Offsets after t_offset at which a JoinRequest may start.
    std::vector<double> backoff_offsets{0.0, 0.13, 0.26};
    // Frames without a JoinAccept before the request is repeated.
    int retry_frames = 6;
    // Frames after synchronizing during which a non-relay node keeps
    // listening in the join slot for new children. Negative means always.
    int parent_listen_frames = -1;
};

struct MacConfig {
    std::uint8_t network_id = 1;
    FrameSchedule schedule = build_schedule(4, 90, 21281);
    double tick_rate_hz = timebase::kDefaultTickRateHz;
    phy::RadioParams radio;
    SlotTiming timing;
    // base_guard is not used; the guard window is timing.t_guard.
    timebase::GuardConfig guard;
    std::size_t queue_capacity = 64;
    int app_payload_bytes = 24;
    JoinConfig join;

    [[nodiscard]] double slot_duration() const { return slot_time(schedule, tick_rate_hz); }
    [[nodiscard]] double frame_duration() const { return frame_time(schedule, tick_rate_hz); }
    [[nodiscard]] std::int64_t to_ticks(double seconds) const;
    [[nodiscard]] double max_backoff() const;
};

// Throws std::invalid_argument when the configuration cannot run: slot timing
// or the join slot does not fit, empty backoff set, payload too large.
void validate(const MacConfig& cfg);

inline constexpr int kJoinRequestPayloadBytes = 1;
inline constexpr int kJoinAcceptPayloadBytes = 3;

struct HeardBeacon {
    NodeId sender{};
    double rssi_dbm = 0.0;
    double tx_start = 0.0;
    int beacon_slot = 0;
    std::int64_t sender_frame = 0;
};

struct PendingJoinRequest {
    MacPacket packet;
    double backoff = 0.0;
};

struct AwaitedAck {
    NodeId peer{};
    std::uint8_t seq = 0;
    bool uplink = true;
};

struct NodeCounters {
    std::uint64_t generated = 0;
    std::uint64_t drops = 0;
    std::uint64_t duplicates = 0;
    std::uint64_t protocol_errors = 0;
    std::uint64_t delivered_downlink = 0;
    std::uint64_t beacon_misses = 0;
    std::uint64_t desyncs = 0;
    std::uint64_t joins = 0;
};

// Slot bookkeeping kept by the relay for the whole network.
struct RelayRegistry {
    std::map<NodeId, int> triple_of;
    std::map<NodeId, NodeId> parent_of;
    int next_free = 1;
};

struct NodeState {
    NodeId id{};
    bool is_relay = false;
    NodeMode mode = NodeMode::Unjoined;
    std::optional<NodeId> parent_id;
    int parent_beacon_slot = -1;
    std::map<NodeId, SlotTriple> children;
    std::optional<SlotTriple> assigned_slots;
    std::deque<MacPacket> uplink_queue;
    std::deque<MacPacket> downlink_queue;
    std::deque<MacPacket> join_accept_queue;
    // Next hop (a child) toward each descendant.
    std::map<NodeId, NodeId> routes;
    std::map<NodeId, std::uint8_t> last_seq_from;
    int consecutive_beacon_misses = 0;
    timebase::VirtualClock clock;
    std::uint8_t next_seq = 0;

    std::vector<HeardBeacon> heard;
    std::optional<std::int64_t> listen_started_frame;
    std::optional<PendingJoinRequest> pending_join_request;
    std::optional<std::int64_t> join_request_frame;
    std::int64_t synchronized_since_frame = 0;
    std::optional<std::int64_t> last_parent_beacon_frame;
    std::optional<AwaitedAck> awaiting_ack;

    RelayRegistry registry;
    NodeCounters counters;
};

// The relay starts synchronized and owns triple 0.
NodeState make_relay(NodeId id, const timebase::VirtualClock& clock, const MacConfig& cfg);
NodeState make_node(NodeId id, const timebase::VirtualClock& clock);

// Frame number on the node's own clock at local tick `tick`.
std::int64_t frame_of(std::int64_t tick, const MacConfig& cfg);

SlotRole resolve_role(const NodeState& node, int slot_index, const MacConfig& cfg);

enum class TxPurpose : std::uint8_t { Beacon, LoRaWan, Uplink, Downlink, JoinRequest, JoinAccept, Ack };

enum class RxPurpose : std::uint8_t { Beacon, UplinkData, DownlinkData, Ack, JoinContention, Continuous };

std::string_view to_string(TxPurpose purpose);
std::string_view to_string(RxPurpose purpose);

// Offsets are seconds after the nominal slot start on the node's clock.
struct PlannedTx {
    double offset = 0.0;
    MacPacket packet;
    phy::Airtime airtime;
    TxPurpose purpose = TxPurpose::Beacon;
    bool await_ack = false;
    // Neighbour expected to acknowledge.
    std::optional<NodeId> peer;
};

struct PlannedRx {
    double center = 0.0;
    double half_width = 0.0;
    phy::Airtime expected_airtime;
    RxPurpose purpose = RxPurpose::Beacon;
    std::optional<NodeId> peer;
};

struct PlanInterval {
    phy::RadioState state = phy::RadioState::Sleep;
    double start = 0.0;
    double end = 0.0;
};

struct SlotPlan {
    SlotRole role;
    std::vector<PlannedTx> tx;
    std::vector<PlannedRx> rx;
    // Synchronized nodes may answer a JoinRequest at this offset of the join
    // slot.
    std::optional<double> join_response_offset;

    // Nominal radio timeline of the slot assuming every exchange succeeds.
    [[nodiscard]] std::vector<PlanInterval> nominal_intervals(const MacConfig& cfg) const;
};

SlotPlan on_slot_start(const NodeState& node, std::int64_t frame, int slot_index, const MacConfig& cfg);

// JoinAccept sent in the response phase of the join slot, if one is queued.
std::optional<PlannedTx> join_response(const NodeState& node, const MacConfig& cfg);

// Acknowledgment window a sender opens after its data frame ends.
PlannedRx ack_window(const AwaitedAck& ack, double tx_end_offset, const MacConfig& cfg);

// Packet the node sends in its own uplink slot: the head of its queue.
std::optional<MacPacket> forwarding_step(const NodeState& node);

// Packet the node sends in the downlink slot of `child`, if any.
std::optional<MacPacket> downlink_for(const NodeState& node, NodeId child);

struct RxContext {
    double tx_start = 0.0;
    std::int64_t sender_frame = 0;
    double rssi_dbm = 0.0;
    std::int64_t frame = 0;
    RxPurpose purpose = RxPurpose::Continuous;
};

struct RxResult {
    std::vector<MacPacket> replies;
    bool ignored = false;
    bool resynced = false;
    bool timing_acquired = false;
    bool ack_matched = false;
    bool dropped = false;
    bool protocol_error = false;
    std::optional<MacPacket> delivered;
    std::optional<NodeMode> new_mode;
};

RxResult handle_rx(NodeState& node, const MacPacket& packet, const RxContext& ctx, const MacConfig& cfg);

// Called after the engine puts a planned packet on the air.
void on_tx_done(NodeState& node, const PlannedTx& tx, std::int64_t frame);

struct JoinDecision {
    NodeId parent{};
    MacPacket request;
    double backoff = 0.0;
};

// Picks the parent among heard beacons and prepares a JoinRequest. Returns
// nothing when no beacon has been heard.
std::optional<JoinDecision> join_procedure(const NodeState& node, std::span<const HeardBeacon> heard,
                                           Rng& rng, const MacConfig& cfg);

enum class JoinSlotAction : std::uint8_t { None, Request, Retry };

// Join slot bookkeeping for unjoined and joining nodes. On Request the node
// moves to Joining, resyncs to its parent and holds a pending JoinRequest.
JoinSlotAction prepare_join_slot(NodeState& node, std::int64_t frame, Rng& rng, const MacConfig& cfg);

enum class BeaconCheck : std::uint8_t { Received, Missed, Desynchronized, NotExpected };

// Evaluated once the parent's beacon slot is over.
BeaconCheck check_beacon(NodeState& node, std::int64_t frame, const MacConfig& cfg);

// Drops the tree membership of a desynchronized node so it can rejoin.
void reset_to_unjoined(NodeState& node);

// Enqueues a new application sample. Returns false when the queue is full.
bool generate_sample(NodeState& node, const MacConfig& cfg);

// Relay only: queue a DownData packet toward `dest`.
bool generate_downlink(NodeState& relay, NodeId dest, int payload_bytes, const MacConfig& cfg);

// Current reception guard, widened after missed beacons.
double current_guard(const NodeState& node, const MacConfig& cfg);

// Nominal local tick of the start of a beacon sent in `beacon_slot` of
// `sender_frame`.
std::int64_t beacon_tick(std::int64_t sender_frame, int beacon_slot, const MacConfig& cfg);

}  // namespace loratdma::protocol
