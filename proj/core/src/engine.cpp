#include "loratdma/engine.hpp"

#include "loratdma/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>

namespace loratdma {

namespace {

using protocol::NodeMode;
using protocol::PlannedTx;
using protocol::RxPurpose;
using protocol::TxPurpose;

constexpr std::int64_t kAlways = std::numeric_limits<std::int64_t>::min();
constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::max();
// Longest LoRa frame this model can emit is well below this.
constexpr std::int64_t kMaxAirtimeNs = 4'000'000'000;

std::int64_t to_ns(double seconds)
{
    return std::llround(seconds * 1e9);
}

double to_s(std::int64_t ns)
{
    return static_cast<double>(ns) * 1e-9;
}

// Order of simultaneous events: a frame ending frees the channel before the
// next slot starts, windows open before transmissions start and close after.
enum class EventKind : std::uint8_t { TxEnd, SlotStart, RxOpen, TxStart, RxDeadline };

struct Event {
    std::int64_t time_ns = 0;
    EventKind kind = EventKind::SlotStart;
    int node = 0;
    std::uint64_t seq = 0;
    std::uint64_t gen = 0;
    std::int64_t frame = 0;
    int slot = 0;
    std::uint64_t ref = 0;
};

struct EventAfter {
    bool operator()(const Event& a, const Event& b) const
    {
        return std::tie(a.time_ns, a.kind, a.node, a.seq) > std::tie(b.time_ns, b.kind, b.node, b.seq);
    }
};

struct Window {
    std::uint64_t id = 0;
    std::int64_t open_ns = 0;
    std::int64_t latest_ns = 0;
    RxPurpose purpose = RxPurpose::Continuous;
    std::optional<NodeId> peer;
    int channel = 0;
    std::int64_t frame = 0;

    [[nodiscard]] bool multi() const
    {
        return purpose == RxPurpose::JoinContention || purpose == RxPurpose::Continuous;
    }
};

struct Runtime {
    protocol::NodeState state;
    NodeSpec spec;
    phy::RadioState radio = phy::RadioState::Sleep;
    std::int64_t radio_since = 0;
    std::optional<Window> window;
    std::optional<std::uint64_t> locked_tx;
    bool window_expired = false;
    std::optional<std::uint64_t> transmitting;
    std::uint64_t slot_gen = 0;
    std::uint64_t life = 0;
    bool has_timing = false;
    std::int64_t frame = 0;
    int slot = 0;
};

class Simulator {
public:
    explicit Simulator(const Scenario& scenario)
        : sc_(scenario), cfg_(scenario.mac), topology_(build_topology(scenario)), rng_(scenario.seed)
    {
    }

    SimulationTrace run();

private:
    const Scenario& sc_;
    const protocol::MacConfig& cfg_;
    Topology topology_;
    Rng rng_;
    SimulationTrace trace_;
    std::vector<Runtime> nodes_;
    std::map<NodeId, int> index_;
    std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
    std::unordered_map<std::uint64_t, PlannedTx> pending_tx_;
    std::unordered_map<std::uint64_t, Window> pending_windows_;
    std::uint64_t next_seq_ = 0;
    std::uint64_t next_ref_ = 0;
    std::int64_t now_ = 0;
    std::int64_t end_ns_ = 0;

    [[nodiscard]] double now_s() const { return to_s(now_); }

    void push(Event e)
    {
        e.seq = next_seq_++;
        queue_.push(e);
    }

    [[nodiscard]] std::int64_t tick_ns(const Runtime& rt, std::int64_t tick) const
    {
        return to_ns(timebase::offset_from(rt.state.clock, tick, 0.0));
    }

    [[nodiscard]] int channel_for(std::int64_t frame, int slot) const
    {
        const std::int64_t c = sc_.channels;
        const std::int64_t raw = frame * cfg_.schedule.slots_per_frame + slot;
        return static_cast<int>(((raw % c) + c) % c);
    }

    [[nodiscard]] std::int64_t half_window_ticks(double half_width) const
    {
        return static_cast<std::int64_t>(std::ceil(half_width * cfg_.tick_rate_hz - 1e-9)) + 1;
    }

    void set_radio(Runtime& rt, phy::RadioState state)
    {
        if (state == rt.radio) {
            return;
        }
        if (now_ > rt.radio_since) {
            trace_.radio.push_back({rt.state.id, rt.radio, to_s(rt.radio_since), now_s()});
        }
        rt.radio = state;
        rt.radio_since = now_;
    }

    void refresh_radio(Runtime& rt)
    {
        if (rt.transmitting) {
            set_radio(rt, phy::RadioState::Transmit);
        } else if (rt.window) {
            set_radio(rt, phy::RadioState::Receive);
        } else {
            set_radio(rt, phy::RadioState::Sleep);
        }
    }

    void record_anchor(const Runtime& rt) { trace_.clock_anchors.push_back({rt.state.id, now_s(), rt.state.clock}); }

    void record_mode(const Runtime& rt, NodeMode mode) { trace_.mode_events.push_back({now_s(), rt.state.id, mode}); }

    void record_event(PacketEventKind kind, const Runtime& rt, const Transmission* tx)
    {
        PacketEvent ev{.time = now_s(), .kind = kind, .node = rt.state.id};
        if (tx != nullptr) {
            ev.peer = tx->sender;
            ev.packet_kind = tx->packet.kind;
            ev.dest = tx->packet.dest;
            ev.origin = tx->packet.origin;
            ev.seq = tx->packet.seq;
            ev.size = on_air_size(tx->packet);
            ev.airtime = to_s(tx->end_ns - tx->start_ns);
            ev.channel = tx->channel;
        }
        trace_.packet_events.push_back(ev);
    }

    void listen_continuously(Runtime& rt, int channel)
    {
        rt.window = Window{next_ref_++, kAlways, kNever, RxPurpose::Continuous, std::nullopt, channel, rt.frame};
        rt.window_expired = false;
        refresh_radio(rt);
    }

    bool needs_continuous(const Runtime& rt) const
    {
        return !rt.state.is_relay && rt.state.mode != NodeMode::Synchronized;
    }

    void start_slot_chain(Runtime& rt)
    {
        ++rt.slot_gen;
        const auto tps = static_cast<std::int64_t>(cfg_.schedule.ticks_per_slot);
        const std::int64_t tick_now = timebase::global_to_tick(rt.state.clock, now_s());
        const std::int64_t floor_slot = tick_now >= 0 ? tick_now / tps : -((-tick_now + tps - 1) / tps);
        const std::int64_t next = (floor_slot + 1) * tps;
        const std::int64_t tpf = cfg_.schedule.ticks_per_frame();
        push({.time_ns = std::max(now_, tick_ns(rt, next)),
              .kind = EventKind::SlotStart,
              .node = index_.at(rt.state.id),
              .gen = rt.slot_gen,
              .frame = protocol::frame_of(next, cfg_),
              .slot = static_cast<int>((next - protocol::frame_of(next, cfg_) * tpf) / tps)});
    }

    void desynchronize(Runtime& rt)
    {
        record_mode(rt, NodeMode::Desynchronized);
        protocol::reset_to_unjoined(rt.state);
        ++rt.life;
        ++rt.slot_gen;
        rt.has_timing = false;
        rt.locked_tx.reset();
        record_mode(rt, NodeMode::Unjoined);
        listen_continuously(rt, 0);
    }

    void apply_beacon_check(Runtime& rt, std::int64_t frame)
    {
        switch (protocol::check_beacon(rt.state, frame, cfg_)) {
        case protocol::BeaconCheck::Missed:
            record_event(PacketEventKind::BeaconMiss, rt, nullptr);
            break;
        case protocol::BeaconCheck::Desynchronized:
            record_event(PacketEventKind::BeaconMiss, rt, nullptr);
            desynchronize(rt);
            break;
        case protocol::BeaconCheck::Received:
        case protocol::BeaconCheck::NotExpected:
            break;
        }
    }

    void close_window(Runtime& rt)
    {
        if (!rt.window) {
            return;
        }
        const Window w = *rt.window;
        rt.window.reset();
        rt.locked_tx.reset();
        rt.window_expired = false;
        if (w.purpose == RxPurpose::Ack) {
            rt.state.awaiting_ack.reset();
        }
        if (needs_continuous(rt)) {
            listen_continuously(rt, rt.state.mode == NodeMode::Joining ? channel_for(rt.frame, rt.slot) : 0);
        } else {
            refresh_radio(rt);
        }
        if (w.purpose == RxPurpose::Beacon) {
            apply_beacon_check(rt, w.frame);
        }
    }

    void schedule_window(Runtime& rt, Window w)
    {
        w.id = next_ref_++;
        const auto ref = w.id;
        const std::int64_t open = std::max(now_, w.open_ns);
        pending_windows_.emplace(ref, w);
        push({.time_ns = open, .kind = EventKind::RxOpen, .node = index_.at(rt.state.id), .gen = rt.life, .ref = ref});
    }

    void schedule_tx(Runtime& rt, std::int64_t time_ns, PlannedTx tx)
    {
        const auto ref = next_ref_++;
        pending_tx_.emplace(ref, std::move(tx));
        push({.time_ns = std::max(now_, time_ns),
              .kind = EventKind::TxStart,
              .node = index_.at(rt.state.id),
              .gen = rt.life,
              .ref = ref});
    }

    void on_slot_start(Runtime& rt, const Event& e);
    void on_rx_open(Runtime& rt, const Event& e);
    void on_rx_deadline(Runtime& rt, const Event& e);
    void on_tx_start(Runtime& rt, const Event& e);
    void on_tx_end(const Event& e);
    void on_received(Runtime& rt, const Transmission& tx, RxPurpose purpose);
    void frame_start_bookkeeping(Runtime& rt, std::int64_t frame);
    void finish();
};

void Simulator::frame_start_bookkeeping(Runtime& rt, std::int64_t frame)
{
    if (rt.state.is_relay) {
        trace_.frame_starts.push_back({frame, now_s()});
        for (const auto& other : nodes_) {
            trace_.queue_samples.push_back({frame, now_s(), other.state.id, other.state.uplink_queue.size(),
                                            other.state.downlink_queue.size()});
        }
    }
    if (rt.spec.drift_jitter_ppm > 0.0) {
        const double drift = std::clamp(rng_.normal(rt.spec.drift_ppm, rt.spec.drift_jitter_ppm),
                                        -timebase::kMaxDriftPpm, timebase::kMaxDriftPpm);
        rt.state.clock = timebase::with_drift(rt.state.clock, drift, frame * cfg_.schedule.ticks_per_frame());
        record_anchor(rt);
    }
    if (rt.state.mode != NodeMode::Synchronized) {
        return;
    }
    if (frame % sc_.traffic.k == 0) {
        trace_.app_runs.push_back({rt.state.id, now_s(), sc_.power.tau_app});
        if (sc_.traffic.uplink && !protocol::generate_sample(rt.state, cfg_)) {
            record_event(PacketEventKind::Drop, rt, nullptr);
        }
    }
    if (rt.state.is_relay && sc_.traffic.downlink_period_frames > 0 && frame % sc_.traffic.downlink_period_frames == 0) {
        std::vector<NodeId> targets;
        for (const auto& [id, triple] : rt.state.registry.triple_of) {
            if (id != rt.state.id && rt.state.routes.contains(id)) {
                targets.push_back(id);
            }
        }
        if (!targets.empty()) {
            const auto pick = static_cast<std::size_t>(frame / sc_.traffic.downlink_period_frames) % targets.size();
            if (!protocol::generate_downlink(rt.state, targets[pick], sc_.traffic.downlink_payload_bytes, cfg_)) {
                record_event(PacketEventKind::Drop, rt, nullptr);
            }
        }
    }
}

void Simulator::on_slot_start(Runtime& rt, const Event& e)
{
    if (e.gen != rt.slot_gen || !rt.has_timing) {
        return;
    }
    rt.frame = e.frame;
    rt.slot = e.slot;
    const int n_slots = cfg_.schedule.slots_per_frame;
    const std::int64_t base = e.frame * cfg_.schedule.ticks_per_frame() +
                              static_cast<std::int64_t>(e.slot) * cfg_.schedule.ticks_per_slot;

    // Synchronized nodes evaluate the beacon when their reception window
    // closes; joining nodes listen continuously and check one slot later.
    if (rt.state.mode == NodeMode::Joining && rt.state.parent_beacon_slot >= 0 &&
        e.slot == (rt.state.parent_beacon_slot + 1) % n_slots) {
        apply_beacon_check(rt, e.slot == 0 ? e.frame - 1 : e.frame);
        if (!rt.has_timing) {
            return;
        }
    }

    if (e.slot == 0) {
        frame_start_bookkeeping(rt, e.frame);
    }

    if (e.slot == cfg_.schedule.join_slot() && !rt.state.is_relay &&
        (rt.state.mode == NodeMode::Unjoined || rt.state.mode == NodeMode::Joining)) {
        if (protocol::prepare_join_slot(rt.state, e.frame, rng_, cfg_) == protocol::JoinSlotAction::Request) {
            record_anchor(rt);
            record_mode(rt, NodeMode::Joining);
        }
    }

    if (rt.window && rt.window->purpose == RxPurpose::Continuous && rt.state.mode == NodeMode::Joining) {
        rt.window->channel = channel_for(e.frame, e.slot);
    }

    const protocol::SlotPlan plan = protocol::on_slot_start(rt.state, e.frame, e.slot, cfg_);
    const int channel = channel_for(e.frame, e.slot);
    const std::int64_t slot_end = base + cfg_.schedule.ticks_per_slot;
    for (const auto& tx : plan.tx) {
        schedule_tx(rt, tick_ns(rt, base + cfg_.to_ticks(tx.offset)), tx);
    }
    for (const auto& rx : plan.rx) {
        const std::int64_t center = base + cfg_.to_ticks(rx.center);
        const std::int64_t half = half_window_ticks(rx.half_width);
        const std::int64_t open = std::max(center - half, base);
        const std::int64_t latest = std::min(center + half, slot_end - cfg_.to_ticks(rx.expected_airtime.seconds));
        if (latest < open) {
            continue;
        }
        schedule_window(rt, Window{0, tick_ns(rt, open), tick_ns(rt, latest), rx.purpose, rx.peer, channel, e.frame});
    }
    if (plan.join_response_offset) {
        PlannedTx marker;
        marker.purpose = TxPurpose::JoinAccept;
        marker.offset = *plan.join_response_offset;
        schedule_tx(rt, tick_ns(rt, base + cfg_.to_ticks(*plan.join_response_offset)), std::move(marker));
    }

    const bool wraps = e.slot + 1 == n_slots;
    push({.time_ns = tick_ns(rt, slot_end),
          .kind = EventKind::SlotStart,
          .node = e.node,
          .gen = rt.slot_gen,
          .frame = wraps ? e.frame + 1 : e.frame,
          .slot = wraps ? 0 : e.slot + 1});
}

void Simulator::on_rx_open(Runtime& rt, const Event& e)
{
    auto it = pending_windows_.find(e.ref);
    if (it == pending_windows_.end()) {
        return;
    }
    const Window w = it->second;
    pending_windows_.erase(it);
    if (e.gen != rt.life || rt.state.mode != NodeMode::Synchronized) {
        return;
    }
    if (rt.window && rt.locked_tx) {
        return;
    }
    rt.window = w;
    rt.window_expired = false;
    refresh_radio(rt);
    push({.time_ns = std::max(now_, w.latest_ns), .kind = EventKind::RxDeadline, .node = e.node, .gen = rt.life,
          .ref = w.id});
}

void Simulator::on_rx_deadline(Runtime& rt, const Event& e)
{
    if (!rt.window || rt.window->id != e.ref) {
        return;
    }
    if (rt.locked_tx) {
        rt.window_expired = true;
        return;
    }
    close_window(rt);
}

void Simulator::on_tx_start(Runtime& rt, const Event& e)
{
    auto it = pending_tx_.find(e.ref);
    if (it == pending_tx_.end()) {
        return;
    }
    PlannedTx planned = std::move(it->second);
    pending_tx_.erase(it);
    if (e.gen != rt.life || rt.transmitting) {
        return;
    }
    if (planned.purpose == TxPurpose::JoinAccept && planned.packet.kind != PacketKind::JoinAccept) {
        auto response = protocol::join_response(rt.state, cfg_);
        if (!response) {
            return;
        }
        planned = std::move(*response);
    }

    // Half duplex: transmitting abandons any reception in progress.
    if (rt.locked_tx) {
        rt.locked_tx.reset();
        if (rt.window && !rt.window->multi()) {
            close_window(rt);
        }
    }

    Transmission tx;
    tx.id = trace_.transmissions.size();
    tx.sender = rt.state.id;
    tx.packet = planned.packet;
    tx.channel = channel_for(rt.frame, rt.slot);
    tx.start_ns = now_;
    tx.end_ns = now_ + planned.airtime.nanoseconds();
    tx.sender_frame = rt.frame;
    tx.purpose = planned.purpose;
    tx.lorawan = planned.purpose == TxPurpose::LoRaWan;
    trace_.transmissions.push_back(tx);
    record_event(PacketEventKind::Tx, rt, &tx);

    protocol::on_tx_done(rt.state, planned, rt.frame);
    rt.transmitting = tx.id;
    refresh_radio(rt);

    if (!tx.lorawan) {
        for (const NodeId receiver : topology_.receivers_of(tx.sender)) {
            auto idx = index_.find(receiver);
            if (idx == index_.end()) {
                continue;
            }
            Runtime& other = nodes_[static_cast<std::size_t>(idx->second)];
            if (other.transmitting || !other.window || other.locked_tx || other.window->channel != tx.channel) {
                continue;
            }
            if (tx.start_ns >= other.window->open_ns && tx.start_ns <= other.window->latest_ns) {
                other.locked_tx = tx.id;
            }
        }
    }
    push({.time_ns = tx.end_ns, .kind = EventKind::TxEnd, .node = e.node, .ref = tx.id});

    if (planned.await_ack && rt.state.awaiting_ack) {
        const std::int64_t end_tick = timebase::next_tick_at_or_after(rt.state.clock, tx.end());
        const std::int64_t center = end_tick + cfg_.to_ticks(cfg_.timing.t_offset);
        const std::int64_t half = half_window_ticks(cfg_.timing.t_guard / 2.0);
        schedule_window(rt, Window{0, tick_ns(rt, center - half), tick_ns(rt, center + half), RxPurpose::Ack,
                                   rt.state.awaiting_ack->peer, tx.channel, rt.frame});
    }
}

void Simulator::on_tx_end(const Event& e)
{
    const Transmission tx = trace_.transmissions[e.ref];
    Runtime& sender = nodes_[static_cast<std::size_t>(e.node)];
    if (sender.transmitting == tx.id) {
        sender.transmitting.reset();
        refresh_radio(sender);
    }
    if (tx.lorawan) {
        record_event(PacketEventKind::Gateway, sender, &tx);
        return;
    }

    std::vector<Listener> listeners;
    std::vector<std::size_t> listener_index;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Runtime& rt = nodes_[i];
        if (rt.locked_tx == tx.id && rt.window) {
            listeners.push_back({rt.state.id, rt.window->open_ns, rt.window->latest_ns, rt.window->channel});
            listener_index.push_back(i);
        }
    }
    if (listeners.empty()) {
        return;
    }

    const auto& all = trace_.transmissions;
    const auto first = std::lower_bound(all.begin(), all.end(), tx.start_ns - kMaxAirtimeNs,
                                        [](const Transmission& t, std::int64_t v) { return t.start_ns < v; });
    const std::span<const Transmission> others(first, all.end());
    const auto deliveries = deliver(tx, others, listeners, topology_, rng_);

    for (std::size_t i = 0; i < deliveries.size(); ++i) {
        Runtime& rt = nodes_[listener_index[i]];
        if (rt.locked_tx != tx.id || !rt.window) {
            continue;
        }
        rt.locked_tx.reset();
        const Window w = *rt.window;
        switch (deliveries[i].outcome) {
        case RxOutcome::Received:
            record_event(PacketEventKind::Rx, rt, &tx);
            on_received(rt, tx, w.purpose);
            break;
        case RxOutcome::Collision:
            record_event(PacketEventKind::Collision, rt, &tx);
            break;
        case RxOutcome::ChannelError:
        case RxOutcome::OutsideWindow:
            record_event(PacketEventKind::ChannelError, rt, &tx);
            break;
        }
        if (!rt.window || rt.window->id != w.id) {
            continue;
        }
        if (w.purpose == RxPurpose::Continuous && !needs_continuous(rt)) {
            rt.window.reset();
            refresh_radio(rt);
        } else if (!w.multi() || rt.window_expired || now_ >= w.latest_ns) {
            close_window(rt);
        }
    }
}

void Simulator::on_received(Runtime& rt, const Transmission& tx, RxPurpose purpose)
{
    const protocol::RxContext ctx{
        .tx_start = tx.start(),
        .sender_frame = tx.sender_frame,
        .rssi_dbm = topology_.find(tx.sender, rt.state.id)->rssi_dbm,
        .frame = rt.frame,
        .purpose = purpose,
    };
    const NodeMode before = rt.state.mode;
    const auto result = protocol::handle_rx(rt.state, tx.packet, ctx, cfg_);

    if (result.timing_acquired) {
        record_anchor(rt);
        rt.has_timing = true;
        rt.frame = tx.sender_frame;
        start_slot_chain(rt);
    }
    if (result.resynced) {
        record_anchor(rt);
        if (rt.state.mode == NodeMode::Synchronized) {
            const Runtime& parent = nodes_[static_cast<std::size_t>(index_.at(tx.sender))];
            const std::int64_t tick = protocol::beacon_tick(tx.sender_frame, tx.packet.seq, cfg_) +
                                      cfg_.to_ticks(to_s(tx.end_ns - tx.start_ns));
            const double eps = timebase::offset_from(parent.state.clock, tick, 0.0) -
                               timebase::offset_from(rt.state.clock, tick, 0.0);
            trace_.sync_samples.push_back({tx.sender_frame, tx.sender, rt.state.id, tick, now_s(), eps});
        }
        start_slot_chain(rt);
    }
    for (const auto& reply : result.replies) {
        const std::int64_t tick =
            timebase::next_tick_at_or_after(rt.state.clock, now_s()) + cfg_.to_ticks(cfg_.timing.t_offset);
        PlannedTx ack;
        ack.packet = reply;
        ack.airtime = phy::time_on_air(on_air_size(reply), cfg_.radio);
        ack.purpose = TxPurpose::Ack;
        schedule_tx(rt, tick_ns(rt, tick), std::move(ack));
    }
    if (result.new_mode && *result.new_mode != before) {
        record_mode(rt, *result.new_mode);
    }
    if (result.dropped) {
        record_event(PacketEventKind::Drop, rt, &tx);
    }
    if (result.protocol_error) {
        record_event(PacketEventKind::ProtocolError, rt, &tx);
    }
}

void Simulator::finish()
{
    for (auto& rt : nodes_) {
        if (end_ns_ > rt.radio_since) {
            trace_.radio.push_back({rt.state.id, rt.radio, to_s(rt.radio_since), to_s(end_ns_)});
        }
        rt.radio_since = end_ns_;
        trace_.summary[rt.state.id] = NodeSummary{rt.state.is_relay, rt.state.mode, rt.state.parent_id,
                                                  rt.state.counters};
    }
    std::stable_sort(trace_.radio.begin(), trace_.radio.end(), [](const RadioInterval& a, const RadioInterval& b) {
        return std::tie(a.node, a.start) < std::tie(b.node, b.start);
    });
    trace_.end_time = to_s(end_ns_);
}

SimulationTrace Simulator::run()
{
    trace_.relay = sc_.relay;
    trace_.frame_duration = cfg_.frame_duration();
    trace_.k = sc_.traffic.k;

    std::vector<NodeSpec> specs = sc_.nodes;
    std::sort(specs.begin(), specs.end(), [](const NodeSpec& a, const NodeSpec& b) { return a.id < b.id; });
    for (const auto& spec : specs) {
        Runtime rt;
        rt.spec = spec;
        timebase::VirtualClock clock{cfg_.tick_rate_hz, spec.drift_ppm, 0, 0.0};
        if (spec.id == sc_.relay) {
            rt.state = protocol::make_relay(spec.id, clock, cfg_);
            rt.has_timing = true;
        } else {
            // Unsynchronized oscillators start at an arbitrary phase.
            clock.epoch_global = -rng_.uniform01() / cfg_.tick_rate_hz;
            rt.state = protocol::make_node(spec.id, clock);
        }
        index_[spec.id] = static_cast<int>(nodes_.size());
        trace_.nodes.push_back(spec.id);
        nodes_.push_back(std::move(rt));
    }

    end_ns_ = to_ns(timebase::ticks_to_global(nodes_[static_cast<std::size_t>(index_.at(sc_.relay))].state.clock,
                                              sc_.frames * cfg_.schedule.ticks_per_frame()));

    for (auto& rt : nodes_) {
        record_anchor(rt);
        record_mode(rt, rt.state.mode);
        if (rt.state.is_relay) {
            push({.time_ns = tick_ns(rt, 0), .kind = EventKind::SlotStart, .node = index_.at(rt.state.id),
                  .gen = rt.slot_gen, .frame = 0, .slot = 0});
        } else {
            listen_continuously(rt, 0);
        }
    }

    while (!queue_.empty()) {
        const Event e = queue_.top();
        if (e.time_ns >= end_ns_) {
            break;
        }
        queue_.pop();
        now_ = e.time_ns;
        Runtime& rt = nodes_[static_cast<std::size_t>(e.node)];
        switch (e.kind) {
        case EventKind::SlotStart: on_slot_start(rt, e); break;
        case EventKind::RxOpen: on_rx_open(rt, e); break;
        case EventKind::RxDeadline: on_rx_deadline(rt, e); break;
        case EventKind::TxStart: on_tx_start(rt, e); break;
        case EventKind::TxEnd: on_tx_end(e); break;
        }
    }
    now_ = end_ns_;
    finish();
    return std::move(trace_);
}

}  // namespace

void validate(const Scenario& scenario)
{
    try {
        protocol::validate(scenario.mac);
        validate(scenario.power);
    } catch (const std::invalid_argument& err) {
        throw ScenarioError(err.what());
    }
    if (scenario.nodes.empty()) {
        throw ScenarioError("scenario has no nodes");
    }
    std::set<NodeId> ids;
    for (const auto& node : scenario.nodes) {
        if (!ids.insert(node.id).second) {
            throw ScenarioError("duplicate node id " + std::to_string(to_int(node.id)));
        }
        if (std::abs(node.drift_ppm) > timebase::kMaxDriftPpm) {
            throw ScenarioError("node " + std::to_string(to_int(node.id)) + ": |drift_ppm| exceeds 500");
        }
        if (node.drift_jitter_ppm < 0.0) {
            throw ScenarioError("node " + std::to_string(to_int(node.id)) + ": drift_jitter_ppm must be >= 0");
        }
    }
    if (!ids.contains(scenario.relay)) {
        throw ScenarioError("relay " + std::to_string(to_int(scenario.relay)) + " is not a listed node");
    }
    if (static_cast<int>(ids.size()) > scenario.mac.schedule.max_nodes) {
        throw ScenarioError(std::to_string(ids.size()) + " nodes exceed max_nodes " +
                            std::to_string(scenario.mac.schedule.max_nodes));
    }
    for (const auto& link : scenario.links) {
        if (!ids.contains(link.from) || !ids.contains(link.to)) {
            throw ScenarioError("link " + std::to_string(to_int(link.from)) + "->" + std::to_string(to_int(link.to)) +
                                " references an unknown node");
        }
        if (link.from == link.to) {
            throw ScenarioError("link from a node to itself");
        }
        if (!(link.per >= 0.0 && link.per <= 1.0)) {
            throw ScenarioError("link per must be in [0, 1]");
        }
    }
    if (scenario.channels < 1) {
        throw ScenarioError("channels must be >= 1");
    }
    if (scenario.traffic.k < 1) {
        throw ScenarioError("traffic.k must be >= 1");
    }
    if (scenario.traffic.downlink_period_frames < 0 || scenario.traffic.downlink_payload_bytes < 0 ||
        scenario.traffic.downlink_payload_bytes > kMaxDataPayloadBytes) {
        throw ScenarioError("invalid downlink traffic settings");
    }
    if (scenario.frames < 1) {
        throw ScenarioError("frames must be >= 1");
    }

    const auto reachable = build_topology(scenario).joinable_from(scenario.relay);
    const std::set<NodeId> reached(reachable.begin(), reachable.end());
    std::string missing;
    for (const NodeId id : ids) {
        if (!reached.contains(id)) {
            missing += (missing.empty() ? "" : ", ") + std::to_string(to_int(id));
        }
    }
    if (!missing.empty()) {
        throw TopologyError("topology is disconnected: node(s) " + missing + " cannot reach relay " +
                            std::to_string(to_int(scenario.relay)));
    }
}

Topology build_topology(const Scenario& scenario)
{
    Topology topology;
    for (const auto& link : scenario.links) {
        topology.add_link(link.from, link.to, Link{link.per, link.rssi_dbm});
        if (link.symmetric) {
            topology.add_link(link.to, link.from, Link{link.per, link.rssi_dbm});
        }
    }
    return topology;
}

SimulationTrace run(const Scenario& scenario)
{
    validate(scenario);
    Simulator sim(scenario);
    return sim.run();
}

namespace {

Scenario base_scenario(std::span<const double> drifts_ppm)
{
    Scenario sc;
    const int count = static_cast<int>(drifts_ppm.size());
    sc.mac.schedule = build_schedule(std::max(4, count), 90, 21281);
    sc.mac.timing = default_timing(sc.mac.radio);
    sc.relay = make_node_id(0);
    for (int i = 0; i < count; ++i) {
        sc.nodes.push_back({make_node_id(i), drifts_ppm[static_cast<std::size_t>(i)], 0.0});
    }
    return sc;
}

}  // namespace

Scenario make_star(std::span<const double> drifts_ppm)
{
    Scenario sc = base_scenario(drifts_ppm);
    for (std::size_t i = 1; i < drifts_ppm.size(); ++i) {
        sc.links.push_back({make_node_id(0), make_node_id(static_cast<int>(i)), 0.0, -60.0, true});
    }
    return sc;
}

Scenario make_line(std::span<const double> drifts_ppm)
{
    Scenario sc = base_scenario(drifts_ppm);
    for (std::size_t i = 1; i < drifts_ppm.size(); ++i) {
        sc.links.push_back({make_node_id(static_cast<int>(i - 1)), make_node_id(static_cast<int>(i)), 0.0, -60.0,
                            true});
    }
    return sc;
}

}  // namespace loratdma
