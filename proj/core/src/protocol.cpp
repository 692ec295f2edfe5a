#include "loratdma/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace loratdma::protocol {

namespace {

phy::Airtime airtime_of(const MacPacket& packet, const MacConfig& cfg)
{
    return phy::time_on_air(on_air_size(packet), cfg.radio);
}

std::uint8_t take_seq(NodeState& node)
{
    const auto seq = static_cast<std::uint8_t>(node.next_seq & kHeaderSeqMask);
    node.next_seq = static_cast<std::uint8_t>((node.next_seq + 1) & kHeaderSeqMask);
    return seq;
}

bool push_bounded(std::deque<MacPacket>& queue, MacPacket packet, const MacConfig& cfg)
{
    if (queue.size() >= cfg.queue_capacity) {
        return false;
    }
    queue.push_back(std::move(packet));
    return true;
}

// Replaces a queued JoinAccept for the same joiner instead of stacking a
// second one.
bool push_join_accept(std::deque<MacPacket>& queue, MacPacket packet, const MacConfig& cfg)
{
    for (auto& queued : queue) {
        if (queued.kind == PacketKind::JoinAccept && queued.dest == packet.dest) {
            queued = std::move(packet);
            return true;
        }
    }
    return push_bounded(queue, std::move(packet), cfg);
}

std::optional<NodeId> next_hop(const NodeState& node, NodeId dest)
{
    if (node.children.contains(dest)) {
        return dest;
    }
    if (auto it = node.routes.find(dest); it != node.routes.end()) {
        return it->second;
    }
    return std::nullopt;
}

SlotTriple triple_from_payload(const std::vector<std::uint8_t>& payload)
{
    if (payload.size() < 3) {
        return {};
    }
    return {payload[0], payload[1], payload[2]};
}

MacPacket forward_copy(NodeState& node, const MacPacket& packet, const MacConfig& cfg)
{
    MacPacket out = packet;
    out.network_id = cfg.network_id;
    out.sender = node.id;
    out.dest = node.parent_id.value_or(node.id);
    out.seq = take_seq(node);
    return out;
}

// Relay side of a JoinRequest: allocate the joiner's triple and route the
// JoinAccept back toward it.
void admit(NodeState& relay, NodeId joiner, NodeId parent, RxResult& result, const MacConfig& cfg)
{
    auto& reg = relay.registry;
    int index = 0;
    if (auto it = reg.triple_of.find(joiner); it != reg.triple_of.end()) {
        index = it->second;
    } else {
        if (reg.next_free >= cfg.schedule.max_nodes) {
            ++relay.counters.protocol_errors;
            result.protocol_error = true;
            return;
        }
        index = reg.next_free++;
        reg.triple_of[joiner] = index;
    }
    reg.parent_of[joiner] = parent;

    const SlotTriple t = cfg.schedule.triple(index);
    MacPacket accept{
        .kind = PacketKind::JoinAccept,
        .network_id = cfg.network_id,
        .sender = relay.id,
        .dest = joiner,
        .origin = relay.id,
        .seq = take_seq(relay),
        .payload = {static_cast<std::uint8_t>(t.beacon), static_cast<std::uint8_t>(t.uplink),
                    static_cast<std::uint8_t>(t.downlink)},
    };
    auto& queue = parent == relay.id ? relay.join_accept_queue : relay.downlink_queue;
    if (!push_join_accept(queue, std::move(accept), cfg)) {
        ++relay.counters.drops;
        result.dropped = true;
    }
}

void handle_beacon(NodeState& node, const MacPacket& packet, const RxContext& ctx, RxResult& result,
                   const MacConfig& cfg)
{
    const HeardBeacon heard{packet.sender, ctx.rssi_dbm, ctx.tx_start, packet.seq, ctx.sender_frame};
    const std::int64_t expected = beacon_tick(ctx.sender_frame, packet.seq, cfg);

    if (node.is_relay) {
        result.ignored = true;
        return;
    }
    if (node.mode == NodeMode::Unjoined || node.mode == NodeMode::Desynchronized) {
        auto it = std::find_if(node.heard.begin(), node.heard.end(),
                               [&](const HeardBeacon& h) { return h.sender == heard.sender; });
        if (it != node.heard.end()) {
            *it = heard;
        } else {
            node.heard.push_back(heard);
        }
        if (!node.listen_started_frame) {
            node.listen_started_frame = ctx.sender_frame;
            node.clock = timebase::resync(node.clock, ctx.tx_start, expected);
            result.timing_acquired = true;
        }
        return;
    }
    if (node.parent_id != packet.sender) {
        result.ignored = true;
        return;
    }
    node.clock = timebase::resync(node.clock, ctx.tx_start, expected);
    node.consecutive_beacon_misses = 0;
    node.last_parent_beacon_frame = ctx.sender_frame;
    node.parent_beacon_slot = packet.seq;
    result.resynced = true;
}

void handle_ack(NodeState& node, const MacPacket& packet, RxResult& result)
{
    if (!node.awaiting_ack || node.awaiting_ack->peer != packet.sender || node.awaiting_ack->seq != packet.seq) {
        result.ignored = true;
        return;
    }
    const AwaitedAck ack = *node.awaiting_ack;
    node.awaiting_ack.reset();
    result.ack_matched = true;
    if (ack.uplink) {
        if (!node.uplink_queue.empty() && node.uplink_queue.front().seq == ack.seq) {
            node.uplink_queue.pop_front();
        }
        return;
    }
    auto it = std::find_if(node.downlink_queue.begin(), node.downlink_queue.end(), [&](const MacPacket& p) {
        return p.seq == ack.seq && next_hop(node, p.dest) == ack.peer;
    });
    if (it != node.downlink_queue.end()) {
        node.downlink_queue.erase(it);
    }
}

// Stores an upward packet. Returns false when it had to be dropped.
bool accept_upward(NodeState& node, const MacPacket& packet, RxResult& result, const MacConfig& cfg)
{
    if (packet.kind == PacketKind::JoinRequest) {
        node.routes[packet.origin] = packet.sender;
        if (node.is_relay) {
            const NodeId parent = packet.payload.empty() ? packet.sender : make_node_id(packet.payload[0]);
            admit(node, packet.origin, parent, result, cfg);
            return true;
        }
    }
    MacPacket stored = node.is_relay ? packet : forward_copy(node, packet, cfg);
    if (!push_bounded(node.uplink_queue, std::move(stored), cfg)) {
        ++node.counters.drops;
        result.dropped = true;
        return false;
    }
    return true;
}

void handle_upward(NodeState& node, const MacPacket& packet, const RxContext& ctx, RxResult& result,
                   const MacConfig& cfg)
{
    if (packet.dest != node.id || node.mode != NodeMode::Synchronized) {
        result.ignored = true;
        return;
    }
    if (ctx.purpose == RxPurpose::JoinContention) {
        if (packet.kind != PacketKind::JoinRequest || packet.sender != packet.origin) {
            result.ignored = true;
            return;
        }
        node.routes[packet.origin] = packet.origin;
        if (node.is_relay) {
            admit(node, packet.origin, node.id, result, cfg);
        } else {
            accept_upward(node, packet, result, cfg);
        }
        return;
    }
    if (ctx.purpose != RxPurpose::UplinkData) {
        result.ignored = true;
        return;
    }
    if (auto it = node.last_seq_from.find(packet.sender); it != node.last_seq_from.end() && it->second == packet.seq) {
        ++node.counters.duplicates;
        result.replies.push_back(make_ack(node.id, packet.seq));
        return;
    }
    if (!accept_upward(node, packet, result, cfg)) {
        return;
    }
    node.last_seq_from[packet.sender] = packet.seq;
    result.replies.push_back(make_ack(node.id, packet.seq));
}

void handle_downward(NodeState& node, const MacPacket& packet, const RxContext& ctx, RxResult& result,
                     const MacConfig& cfg)
{
    if (!node.parent_id || packet.sender != *node.parent_id) {
        result.ignored = true;
        return;
    }
    const bool acked = ctx.purpose == RxPurpose::DownlinkData;
    if (acked) {
        if (auto it = node.last_seq_from.find(packet.sender);
            it != node.last_seq_from.end() && it->second == packet.seq) {
            ++node.counters.duplicates;
            result.replies.push_back(make_ack(node.id, packet.seq));
            return;
        }
    }

    if (packet.dest == node.id) {
        if (packet.kind == PacketKind::JoinAccept) {
            if (node.mode == NodeMode::Joining) {
                node.mode = NodeMode::Synchronized;
                node.assigned_slots = triple_from_payload(packet.payload);
                node.synchronized_since_frame = ctx.frame;
                node.consecutive_beacon_misses = 0;
                node.pending_join_request.reset();
                node.join_request_frame.reset();
                node.heard.clear();
                node.listen_started_frame.reset();
                ++node.counters.joins;
                result.new_mode = NodeMode::Synchronized;
            }
        } else {
            ++node.counters.delivered_downlink;
            result.delivered = packet;
        }
    } else {
        if (node.mode != NodeMode::Synchronized) {
            result.ignored = true;
            return;
        }
        const auto route = node.routes.find(packet.dest);
        if (route == node.routes.end()) {
            ++node.counters.protocol_errors;
            result.protocol_error = true;
            return;
        }
        MacPacket out = packet;
        out.sender = node.id;
        out.seq = take_seq(node);
        bool stored = false;
        if (packet.kind == PacketKind::JoinAccept) {
            stored = push_join_accept(route->second == packet.dest ? node.join_accept_queue : node.downlink_queue,
                                      std::move(out), cfg);
        } else {
            stored = push_bounded(node.downlink_queue, std::move(out), cfg);
        }
        if (!stored) {
            ++node.counters.drops;
            result.dropped = true;
            return;
        }
    }
    if (acked) {
        node.last_seq_from[packet.sender] = packet.seq;
        result.replies.push_back(make_ack(node.id, packet.seq));
    }
}

double join_response_offset(const MacConfig& cfg)
{
    const MacPacket request{.kind = PacketKind::JoinRequest,
                            .payload = std::vector<std::uint8_t>(kJoinRequestPayloadBytes)};
    return cfg.timing.t_offset + cfg.max_backoff() + airtime_of(request, cfg).seconds + cfg.timing.t_offset;
}

}  // namespace

std::string_view to_string(NodeMode mode)
{
    switch (mode) {
    case NodeMode::Unjoined: return "unjoined";
    case NodeMode::Joining: return "joining";
    case NodeMode::Synchronized: return "synchronized";
    case NodeMode::Desynchronized: return "desynchronized";
    }
    return "unknown";
}

std::string_view to_string(TxPurpose purpose)
{
    switch (purpose) {
    case TxPurpose::Beacon: return "beacon";
    case TxPurpose::LoRaWan: return "lorawan";
    case TxPurpose::Uplink: return "uplink";
    case TxPurpose::Downlink: return "downlink";
    case TxPurpose::JoinRequest: return "join_request";
    case TxPurpose::JoinAccept: return "join_accept";
    case TxPurpose::Ack: return "ack";
    }
    return "unknown";
}

std::string_view to_string(RxPurpose purpose)
{
    switch (purpose) {
    case RxPurpose::Beacon: return "beacon";
    case RxPurpose::UplinkData: return "uplink";
    case RxPurpose::DownlinkData: return "downlink";
    case RxPurpose::Ack: return "ack";
    case RxPurpose::JoinContention: return "join";
    case RxPurpose::Continuous: return "continuous";
    }
    return "unknown";
}

std::int64_t MacConfig::to_ticks(double seconds) const
{
    return std::llround(seconds * tick_rate_hz);
}

double MacConfig::max_backoff() const
{
    if (join.backoff_offsets.empty()) {
        return 0.0;
    }
    return *std::max_element(join.backoff_offsets.begin(), join.backoff_offsets.end());
}

void validate(const MacConfig& cfg)
{
    phy::validate(cfg.radio);
    timebase::validate(cfg.guard);
    if (!(cfg.tick_rate_hz > 0.0)) {
        throw std::invalid_argument("tick rate must be positive");
    }
    const double slot = cfg.slot_duration();
    validate(cfg.timing, slot);
    if (cfg.queue_capacity == 0) {
        throw std::invalid_argument("queue capacity must be at least 1");
    }
    if (cfg.app_payload_bytes < 0 || cfg.app_payload_bytes > kMaxDataPayloadBytes) {
        throw std::invalid_argument("application payload must be 0.." + std::to_string(kMaxDataPayloadBytes) +
                                    " bytes");
    }
    if (cfg.join.backoff_offsets.empty()) {
        throw std::invalid_argument("join backoff set is empty");
    }
    for (double b : cfg.join.backoff_offsets) {
        if (b < 0.0) {
            throw std::invalid_argument("join backoff offsets must be non-negative");
        }
    }
    if (cfg.join.listen_frames < 1 || cfg.join.retry_frames < 1) {
        throw std::invalid_argument("join listen_frames and retry_frames must be at least 1");
    }

    const double beacon = phy::time_on_air(kBeaconBytes, cfg.radio).seconds;
    const double ack = phy::time_on_air(kAckBytes, cfg.radio).seconds;
    const double data = phy::time_on_air(kMacHeaderBytes + cfg.app_payload_bytes, cfg.radio).seconds;
    if (cfg.timing.t_bcn + 1e-9 < beacon || cfg.timing.t_ack + 1e-9 < ack || cfg.timing.t_data_max + 1e-9 < data) {
        throw std::invalid_argument("slot timing airtimes are shorter than the radio needs");
    }
    const double accept =
        phy::time_on_air(kMacHeaderBytes + kJoinAcceptPayloadBytes, cfg.radio).seconds;
    if (join_response_offset(cfg) + accept > slot) {
        throw std::invalid_argument("join slot does not fit: backoff, JoinRequest and JoinAccept exceed the slot");
    }
}

NodeState make_relay(NodeId id, const timebase::VirtualClock& clock, const MacConfig& cfg)
{
    NodeState node;
    node.id = id;
    node.is_relay = true;
    node.mode = NodeMode::Synchronized;
    node.assigned_slots = cfg.schedule.triple(0);
    node.clock = clock;
    node.registry.triple_of[id] = 0;
    return node;
}

NodeState make_node(NodeId id, const timebase::VirtualClock& clock)
{
    NodeState node;
    node.id = id;
    node.clock = clock;
    return node;
}

std::int64_t frame_of(std::int64_t tick, const MacConfig& cfg)
{
    const std::int64_t tpf = cfg.schedule.ticks_per_frame();
    return tick >= 0 ? tick / tpf : -((-tick + tpf - 1) / tpf);
}

std::int64_t beacon_tick(std::int64_t sender_frame, int beacon_slot, const MacConfig& cfg)
{
    return sender_frame * cfg.schedule.ticks_per_frame() +
           static_cast<std::int64_t>(beacon_slot) * cfg.schedule.ticks_per_slot + cfg.to_ticks(cfg.timing.t_offset);
}

double current_guard(const NodeState& node, const MacConfig& cfg)
{
    timebase::GuardConfig guard = cfg.guard;
    guard.base_guard = cfg.timing.t_guard;
    return timebase::effective_guard(guard, node.consecutive_beacon_misses, cfg.slot_duration());
}

SlotRole resolve_role(const NodeState& node, int slot_index, const MacConfig& cfg)
{
    using Kind = SlotRole::Kind;
    if (slot_index < 0 || slot_index >= cfg.schedule.slots_per_frame) {
        return {};
    }
    const SlotTemplate& tpl = cfg.schedule.layout[static_cast<std::size_t>(slot_index)];
    if (tpl.kind == SlotKind::Join) {
        return {Kind::JoinContention, std::nullopt};
    }
    if (node.mode != NodeMode::Synchronized) {
        return {};
    }
    const auto child_owning = [&](auto member) -> std::optional<NodeId> {
        for (const auto& [child, triple] : node.children) {
            if (triple.*member == slot_index) {
                return child;
            }
        }
        return std::nullopt;
    };

    switch (tpl.kind) {
    case SlotKind::Beacon:
        if (node.assigned_slots && node.assigned_slots->beacon == slot_index) {
            return {Kind::BeaconTx, node.id};
        }
        if (node.parent_id && node.parent_beacon_slot == slot_index) {
            return {Kind::BeaconRx, node.parent_id};
        }
        return {};
    case SlotKind::LoRaWan:
        return node.is_relay ? SlotRole{Kind::LoRaWanUplink, node.id} : SlotRole{};
    case SlotKind::Uplink:
        if (!node.is_relay && node.assigned_slots && node.assigned_slots->uplink == slot_index) {
            return {Kind::UplinkExchange, node.id};
        }
        if (auto child = child_owning(&SlotTriple::uplink)) {
            return {Kind::UplinkExchange, child};
        }
        return {};
    case SlotKind::Downlink:
        if (!node.is_relay && node.assigned_slots && node.assigned_slots->downlink == slot_index) {
            return {Kind::DownlinkExchange, node.id};
        }
        if (auto child = child_owning(&SlotTriple::downlink)) {
            return {Kind::DownlinkExchange, child};
        }
        return {};
    default:
        return {};
    }
}

SlotPlan on_slot_start(const NodeState& node, std::int64_t frame, int slot_index, const MacConfig& cfg)
{
    using Kind = SlotRole::Kind;
    SlotPlan plan;
    plan.role = resolve_role(node, slot_index, cfg);
    const SlotTiming& tm = cfg.timing;
    const double data_start = tm.t_offset + tm.t_guard / 2.0;

    switch (plan.role.kind) {
    case Kind::BeaconTx: {
        MacPacket beacon = make_beacon(cfg.network_id, node.id, slot_index);
        const auto airtime = airtime_of(beacon, cfg);
        plan.tx.push_back({tm.t_offset, std::move(beacon), airtime, TxPurpose::Beacon, false, std::nullopt});
        break;
    }
    case Kind::BeaconRx:
        plan.rx.push_back({tm.t_offset, current_guard(node, cfg) / 2.0, phy::Airtime{tm.t_bcn}, RxPurpose::Beacon,
                           plan.role.owner});
        break;
    case Kind::LoRaWanUplink:
        if (!node.uplink_queue.empty()) {
            const MacPacket& head = node.uplink_queue.front();
            const auto airtime = phy::lorawan_time_on_air(static_cast<int>(head.payload.size()), cfg.radio);
            plan.tx.push_back({tm.t_offset, head, airtime, TxPurpose::LoRaWan, false, std::nullopt});
        }
        break;
    case Kind::UplinkExchange:
        if (plan.role.owner == node.id) {
            if (auto head = forwarding_step(node)) {
                head->dest = *node.parent_id;
                const auto airtime = airtime_of(*head, cfg);
                plan.tx.push_back({data_start, std::move(*head), airtime, TxPurpose::Uplink, true, node.parent_id});
            }
        } else {
            plan.rx.push_back({data_start, tm.t_guard / 2.0, phy::Airtime{tm.t_data_max}, RxPurpose::UplinkData,
                               plan.role.owner});
        }
        break;
    case Kind::DownlinkExchange:
        if (plan.role.owner == node.id) {
            plan.rx.push_back({data_start, current_guard(node, cfg) / 2.0, phy::Airtime{tm.t_data_max},
                               RxPurpose::DownlinkData, node.parent_id});
        } else if (auto packet = downlink_for(node, *plan.role.owner)) {
            const auto airtime = airtime_of(*packet, cfg);
            plan.tx.push_back({data_start, std::move(*packet), airtime, TxPurpose::Downlink, true, plan.role.owner});
        }
        break;
    case Kind::JoinContention:
        if (node.pending_join_request &&
            (node.mode == NodeMode::Joining || node.mode == NodeMode::Unjoined)) {
            const auto& pending = *node.pending_join_request;
            const auto airtime = airtime_of(pending.packet, cfg);
            plan.tx.push_back({tm.t_offset + pending.backoff, pending.packet, airtime, TxPurpose::JoinRequest, false,
                               std::nullopt});
        }
        if (node.mode == NodeMode::Synchronized) {
            const bool sniff = node.is_relay || cfg.join.parent_listen_frames < 0 ||
                               frame - node.synchronized_since_frame < cfg.join.parent_listen_frames;
            if (sniff) {
                const MacPacket request{.kind = PacketKind::JoinRequest,
                                        .payload = std::vector<std::uint8_t>(kJoinRequestPayloadBytes)};
                const double half_backoff = cfg.max_backoff() / 2.0;
                plan.rx.push_back({tm.t_offset + half_backoff, half_backoff + tm.t_guard / 2.0,
                                   airtime_of(request, cfg), RxPurpose::JoinContention, std::nullopt});
            }
            plan.join_response_offset = join_response_offset(cfg);
        }
        break;
    case Kind::Idle:
        break;
    }
    return plan;
}

std::optional<PlannedTx> join_response(const NodeState& node, const MacConfig& cfg)
{
    if (node.join_accept_queue.empty() || node.mode != NodeMode::Synchronized) {
        return std::nullopt;
    }
    const MacPacket& accept = node.join_accept_queue.front();
    return PlannedTx{join_response_offset(cfg), accept, airtime_of(accept, cfg), TxPurpose::JoinAccept, false,
                     accept.dest};
}

PlannedRx ack_window(const AwaitedAck& ack, double tx_end_offset, const MacConfig& cfg)
{
    return {tx_end_offset + cfg.timing.t_offset, cfg.timing.t_guard / 2.0, phy::Airtime{cfg.timing.t_ack},
            RxPurpose::Ack, ack.peer};
}

std::vector<PlanInterval> SlotPlan::nominal_intervals(const MacConfig& cfg) const
{
    using phy::RadioState;
    const SlotTiming& tm = cfg.timing;
    std::vector<PlanInterval> active;
    for (const auto& t : tx) {
        const double end = t.offset + t.airtime.seconds;
        active.push_back({RadioState::Transmit, t.offset, end});
        if (t.await_ack) {
            active.push_back({RadioState::Receive, end + tm.t_offset - tm.t_guard / 2.0,
                              end + tm.t_offset + tm.t_guard / 2.0 + tm.t_ack});
        }
    }
    for (const auto& r : rx) {
        const double open = r.center - r.half_width;
        const double close = r.center + r.half_width + r.expected_airtime.seconds;
        active.push_back({RadioState::Receive, open, close});
        if (r.purpose == RxPurpose::UplinkData || r.purpose == RxPurpose::DownlinkData) {
            const double ack_start = r.center + r.expected_airtime.seconds + tm.t_offset;
            active.push_back({RadioState::Transmit, ack_start, ack_start + tm.t_ack});
        }
    }
    std::sort(active.begin(), active.end(), [](const PlanInterval& a, const PlanInterval& b) {
        return a.start < b.start;
    });

    const double slot = cfg.slot_duration();
    std::vector<PlanInterval> out;
    double cursor = 0.0;
    for (auto iv : active) {
        iv.start = std::clamp(iv.start, cursor, slot);
        iv.end = std::clamp(iv.end, iv.start, slot);
        if (iv.start > cursor) {
            out.push_back({RadioState::Sleep, cursor, iv.start});
        }
        if (iv.end > iv.start) {
            out.push_back(iv);
            cursor = iv.end;
        }
    }
    if (cursor < slot) {
        out.push_back({RadioState::Sleep, cursor, slot});
    }
    return out;
}

std::optional<MacPacket> forwarding_step(const NodeState& node)
{
    if (node.uplink_queue.empty() || node.is_relay || !node.parent_id) {
        return std::nullopt;
    }
    return node.uplink_queue.front();
}

std::optional<MacPacket> downlink_for(const NodeState& node, NodeId child)
{
    for (const auto& packet : node.downlink_queue) {
        if (next_hop(node, packet.dest) == child) {
            return packet;
        }
    }
    return std::nullopt;
}

RxResult handle_rx(NodeState& node, const MacPacket& packet, const RxContext& ctx, const MacConfig& cfg)
{
    RxResult result;
    if (packet.kind != PacketKind::Ack && packet.network_id != cfg.network_id) {
        result.ignored = true;
        return result;
    }
    switch (packet.kind) {
    case PacketKind::Beacon: handle_beacon(node, packet, ctx, result, cfg); break;
    case PacketKind::Ack: handle_ack(node, packet, result); break;
    case PacketKind::JoinRequest:
    case PacketKind::UpData: handle_upward(node, packet, ctx, result, cfg); break;
    case PacketKind::JoinAccept:
    case PacketKind::DownData: handle_downward(node, packet, ctx, result, cfg); break;
    default:
        ++node.counters.protocol_errors;
        result.protocol_error = true;
        break;
    }
    return result;
}

void on_tx_done(NodeState& node, const PlannedTx& tx, std::int64_t frame)
{
    switch (tx.purpose) {
    case TxPurpose::JoinRequest:
        if (node.pending_join_request && node.pending_join_request->packet == tx.packet) {
            node.pending_join_request.reset();
            node.join_request_frame = frame;
        }
        break;
    case TxPurpose::JoinAccept:
        if (!node.join_accept_queue.empty() && node.join_accept_queue.front() == tx.packet) {
            node.join_accept_queue.pop_front();
            node.children[tx.packet.dest] = triple_from_payload(tx.packet.payload);
            node.routes[tx.packet.dest] = tx.packet.dest;
        }
        break;
    case TxPurpose::LoRaWan:
        if (!node.uplink_queue.empty()) {
            node.uplink_queue.pop_front();
        }
        break;
    case TxPurpose::Uplink:
    case TxPurpose::Downlink:
        if (tx.peer) {
            node.awaiting_ack = AwaitedAck{*tx.peer, tx.packet.seq, tx.purpose == TxPurpose::Uplink};
        }
        break;
    case TxPurpose::Beacon:
    case TxPurpose::Ack:
        break;
    }
}

std::optional<JoinDecision> join_procedure(const NodeState& node, std::span<const HeardBeacon> heard, Rng& rng,
                                           const MacConfig& cfg)
{
    if (heard.empty() || cfg.join.backoff_offsets.empty()) {
        return std::nullopt;
    }
    const HeardBeacon* best = &heard.front();
    for (const auto& h : heard) {
        if (h.rssi_dbm > best->rssi_dbm || (h.rssi_dbm == best->rssi_dbm && to_int(h.sender) < to_int(best->sender))) {
            best = &h;
        }
    }
    JoinDecision decision;
    decision.parent = best->sender;
    decision.backoff = cfg.join.backoff_offsets[rng.uniform_index(cfg.join.backoff_offsets.size())];
    decision.request = MacPacket{
        .kind = PacketKind::JoinRequest,
        .network_id = cfg.network_id,
        .sender = node.id,
        .dest = best->sender,
        .origin = node.id,
        .seq = static_cast<std::uint8_t>(node.next_seq & kHeaderSeqMask),
        .payload = {static_cast<std::uint8_t>(to_int(best->sender))},
    };
    return decision;
}

JoinSlotAction prepare_join_slot(NodeState& node, std::int64_t frame, Rng& rng, const MacConfig& cfg)
{
    if (node.is_relay) {
        return JoinSlotAction::None;
    }
    if (node.mode == NodeMode::Unjoined) {
        if (!node.listen_started_frame || frame < *node.listen_started_frame + cfg.join.listen_frames - 1) {
            return JoinSlotAction::None;
        }
        auto decision = join_procedure(node, node.heard, rng, cfg);
        if (!decision) {
            return JoinSlotAction::None;
        }
        const auto parent = std::find_if(node.heard.begin(), node.heard.end(),
                                         [&](const HeardBeacon& h) { return h.sender == decision->parent; });
        node.clock = timebase::resync(node.clock, parent->tx_start,
                                      beacon_tick(parent->sender_frame, parent->beacon_slot, cfg));
        node.parent_id = decision->parent;
        node.parent_beacon_slot = parent->beacon_slot;
        node.last_parent_beacon_frame = parent->sender_frame;
        node.consecutive_beacon_misses = 0;
        node.mode = NodeMode::Joining;
        take_seq(node);
        node.pending_join_request = PendingJoinRequest{std::move(decision->request), decision->backoff};
        return JoinSlotAction::Request;
    }
    if (node.mode == NodeMode::Joining && !node.pending_join_request && node.join_request_frame &&
        frame - *node.join_request_frame >= cfg.join.retry_frames) {
        MacPacket request{
            .kind = PacketKind::JoinRequest,
            .network_id = cfg.network_id,
            .sender = node.id,
            .dest = *node.parent_id,
            .origin = node.id,
            .seq = take_seq(node),
            .payload = {static_cast<std::uint8_t>(to_int(*node.parent_id))},
        };
        const double backoff = cfg.join.backoff_offsets[rng.uniform_index(cfg.join.backoff_offsets.size())];
        node.pending_join_request = PendingJoinRequest{std::move(request), backoff};
        return JoinSlotAction::Retry;
    }
    return JoinSlotAction::None;
}

BeaconCheck check_beacon(NodeState& node, std::int64_t frame, const MacConfig& cfg)
{
    if (node.is_relay || !node.parent_id ||
        (node.mode != NodeMode::Joining && node.mode != NodeMode::Synchronized)) {
        return BeaconCheck::NotExpected;
    }
    if (node.last_parent_beacon_frame == frame) {
        return BeaconCheck::Received;
    }
    ++node.consecutive_beacon_misses;
    ++node.counters.beacon_misses;
    if (node.consecutive_beacon_misses >= cfg.guard.max_misses) {
        node.mode = NodeMode::Desynchronized;
        ++node.counters.desyncs;
        return BeaconCheck::Desynchronized;
    }
    return BeaconCheck::Missed;
}

void reset_to_unjoined(NodeState& node)
{
    node.mode = NodeMode::Unjoined;
    node.parent_id.reset();
    node.parent_beacon_slot = -1;
    node.assigned_slots.reset();
    node.children.clear();
    node.routes.clear();
    node.downlink_queue.clear();
    node.join_accept_queue.clear();
    node.consecutive_beacon_misses = 0;
    node.heard.clear();
    node.listen_started_frame.reset();
    node.pending_join_request.reset();
    node.join_request_frame.reset();
    node.last_parent_beacon_frame.reset();
    node.awaiting_ack.reset();
}

bool generate_sample(NodeState& node, const MacConfig& cfg)
{
    ++node.counters.generated;
    MacPacket sample{
        .kind = PacketKind::UpData,
        .network_id = cfg.network_id,
        .sender = node.id,
        .dest = node.parent_id.value_or(node.id),
        .origin = node.id,
        .seq = 0,
        .payload = std::vector<std::uint8_t>(static_cast<std::size_t>(cfg.app_payload_bytes),
                                             static_cast<std::uint8_t>(node.counters.generated & 0xFF)),
    };
    if (node.uplink_queue.size() >= cfg.queue_capacity) {
        ++node.counters.drops;
        return false;
    }
    sample.seq = take_seq(node);
    node.uplink_queue.push_back(std::move(sample));
    return true;
}

bool generate_downlink(NodeState& relay, NodeId dest, int payload_bytes, const MacConfig& cfg)
{
    if (!relay.is_relay || !next_hop(relay, dest)) {
        return false;
    }
    MacPacket packet{
        .kind = PacketKind::DownData,
        .network_id = cfg.network_id,
        .sender = relay.id,
        .dest = dest,
        .origin = relay.id,
        .seq = take_seq(relay),
        .payload = std::vector<std::uint8_t>(static_cast<std::size_t>(payload_bytes)),
    };
    if (!push_bounded(relay.downlink_queue, std::move(packet), cfg)) {
        ++relay.counters.drops;
        return false;
    }
    return true;
}

}  // namespace loratdma::protocol
