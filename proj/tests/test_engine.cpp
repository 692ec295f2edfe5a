#include "loratdma/engine.hpp"
#include "loratdma/metrics.hpp"
#include "loratdma/trace_export.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <map>
#include <sstream>

using namespace loratdma;
using protocol::NodeMode;

namespace {

constexpr std::array<double, 4> kDrifts{0.0, 20.0, -20.0, 10.0};

Scenario star(std::int64_t frames = 60)
{
    auto sc = make_star(kDrifts);
    sc.frames = frames;
    return sc;
}

Scenario line(std::int64_t frames = 60)
{
    auto sc = make_line(kDrifts);
    sc.frames = frames;
    return sc;
}

std::string csv_dump(const SimulationTrace& trace, const PowerProfile& power)
{
    std::ostringstream out;
    write_radio_csv(out, trace);
    write_packets_csv(out, trace);
    write_sync_csv(out, trace);
    write_summary_csv(out, trace, power);
    return out.str();
}

double all_sync_time(const SimulationTrace& trace)
{
    const auto frame = all_synchronized_frame(trace);
    EXPECT_TRUE(frame.has_value());
    return frame ? *frame_start_time(trace, *frame) : trace.end_time;
}

}  // namespace

TEST(Engine, StarJoinsQuickly)
{
    const auto sc = star(30);
    const auto trace = run(sc);
    const auto frame = all_synchronized_frame(trace);
    ASSERT_TRUE(frame);
    EXPECT_LE(*frame, 20);
    for (const auto& [id, s] : trace.summary) {
        EXPECT_EQ(s.final_mode, NodeMode::Synchronized);
        if (!s.is_relay) {
            EXPECT_EQ(s.parent, make_node_id(0));
        }
    }
}

TEST(Engine, FourBeaconsPerSteadyFrame)
{
    const auto sc = star(40);
    const auto trace = run(sc);
    const auto synced = *all_synchronized_frame(trace);
    for (std::int64_t f = synced + 1; f + 1 < sc.frames; ++f) {
        const double start = *frame_start_time(trace, f);
        const double end = *frame_start_time(trace, f + 1);
        std::map<NodeId, int> beacons;
        int lorawan = 0;
        for (const auto& tx : trace.transmissions) {
            if (tx.start() < start || tx.start() >= end) {
                continue;
            }
            if (tx.packet.kind == PacketKind::Beacon && !tx.lorawan) {
                ++beacons[tx.sender];
            }
            if (tx.lorawan) {
                ++lorawan;
                EXPECT_EQ(tx.sender, sc.relay);
            }
        }
        EXPECT_EQ(beacons.size(), 4u) << "frame " << f;
        for (const auto& [node, n] : beacons) {
            EXPECT_EQ(n, 1) << "frame " << f;
        }
        EXPECT_LE(lorawan, 1);
    }
}

TEST(Engine, LoneRelay)
{
    const std::array<double, 1> drift{0.0};
    auto sc = make_star(drift);
    sc.frames = 5;
    sc.traffic.k = 1;
    const auto trace = run(sc);
    int beacons = 0;
    int lorawan = 0;
    for (const auto& tx : trace.transmissions) {
        beacons += tx.packet.kind == PacketKind::Beacon ? 1 : 0;
        lorawan += tx.lorawan ? 1 : 0;
    }
    EXPECT_EQ(beacons, 5);
    EXPECT_EQ(lorawan, 5);
    std::map<phy::RadioState, double> time_in;
    for (const auto& iv : trace.radio) {
        time_in[iv.state] += iv.end - iv.start;
    }
    EXPECT_NEAR(time_in[phy::RadioState::Transmit], 5 * (0.103424 + 0.267264), 1e-6);
    // The only listening a lone relay does is the join slot.
    EXPECT_GT(time_in[phy::RadioState::Receive], 0.0);
    EXPECT_LT(time_in[phy::RadioState::Receive], 5 * sc.mac.frame_duration() / sc.mac.schedule.slots_per_frame);
    double total = 0.0;
    for (const auto& [state, t] : time_in) {
        total += t;
    }
    EXPECT_NEAR(total, trace.end_time, 1e-6);
}

TEST(Engine, RadioTimelineIsContiguous)
{
    for (const auto& sc : {star(), line()}) {
        const auto trace = run(sc);
        std::map<NodeId, double> cursor;
        std::map<NodeId, double> total;
        for (const auto& iv : trace.radio) {
            const double expected_start = cursor.contains(iv.node) ? cursor[iv.node] : 0.0;
            ASSERT_NEAR(iv.start, expected_start, 1e-9);
            ASSERT_GE(iv.end, iv.start);
            cursor[iv.node] = iv.end;
            total[iv.node] += iv.end - iv.start;
        }
        for (const auto& id : trace.nodes) {
            EXPECT_NEAR(total[id], trace.end_time, 1e-6) << to_int(id);
        }
    }
}

TEST(Engine, TimestampsAreOrdered)
{
    const auto trace = run(line());
    for (std::size_t i = 1; i < trace.packet_events.size(); ++i) {
        ASSERT_LE(trace.packet_events[i - 1].time, trace.packet_events[i].time);
    }
    for (std::size_t i = 1; i < trace.transmissions.size(); ++i) {
        ASSERT_LE(trace.transmissions[i - 1].start_ns, trace.transmissions[i].start_ns);
    }
    for (const auto& tx : trace.transmissions) {
        ASSERT_GT(tx.end_ns, tx.start_ns);
        if (!tx.lorawan) {
            const auto airtime = phy::time_on_air(on_air_size(tx.packet), phy::RadioParams{});
            ASSERT_EQ(tx.end_ns - tx.start_ns, airtime.nanoseconds());
        }
    }
}

TEST(Engine, TdmaExclusivityInSteadyState)
{
    for (const auto& sc : {star(), line()}) {
        const auto trace = run(sc);
        const double from = all_sync_time(trace);
        std::vector<const Transmission*> steady;
        for (const auto& tx : trace.transmissions) {
            if (tx.start() >= from && !tx.lorawan) {
                steady.push_back(&tx);
            }
        }
        for (std::size_t i = 0; i < steady.size(); ++i) {
            for (std::size_t j = i + 1; j < steady.size() && steady[j]->start_ns < steady[i]->end_ns; ++j) {
                EXPECT_FALSE(steady[i]->channel == steady[j]->channel && steady[i]->sender != steady[j]->sender)
                    << to_int(steady[i]->sender) << " and " << to_int(steady[j]->sender) << " at "
                    << steady[i]->start();
            }
        }
        for (const auto& ev : trace.packet_events) {
            if (ev.time >= from) {
                EXPECT_NE(ev.kind, PacketEventKind::Collision);
                EXPECT_NE(ev.kind, PacketEventKind::BeaconMiss);
                EXPECT_NE(ev.kind, PacketEventKind::Drop);
            }
        }
    }
}

TEST(Engine, UplinkDataReachesTheGatewayWithinDepthTimesK)
{
    const auto sc = line(80);
    const auto trace = run(sc);
    const double cutoff = trace.end_time - (3.0 * sc.traffic.k + 1.0) * trace.frame_duration;
    std::map<NodeId, int> generated;
    for (const auto& app : trace.app_runs) {
        if (app.start < cutoff) {
            ++generated[app.node];
        }
    }
    std::map<NodeId, int> delivered;
    for (const auto& ev : trace.packet_events) {
        if (ev.kind == PacketEventKind::Gateway) {
            ++delivered[ev.origin];
        }
    }
    for (const auto& id : trace.nodes) {
        EXPECT_GT(generated[id], 0);
        EXPECT_GE(delivered[id], generated[id]) << to_int(id);
    }
    for (const auto& [id, s] : trace.summary) {
        EXPECT_EQ(s.counters.drops, 0u);
    }
}

TEST(Engine, DownlinkTrafficIsDelivered)
{
    auto sc = line(60);
    sc.traffic.downlink_period_frames = 2;
    const auto trace = run(sc);
    std::uint64_t delivered = 0;
    for (const auto& [id, s] : trace.summary) {
        delivered += s.counters.delivered_downlink;
    }
    EXPECT_GT(delivered, 10u);
}

TEST(Engine, Deterministic)
{
    auto sc = line(40);
    sc.links[1].per = 0.05;
    const auto a = run(sc);
    const auto b = run(sc);
    EXPECT_EQ(csv_dump(a, sc.power), csv_dump(b, sc.power));
    sc.seed = 2;
    const auto c = run(sc);
    EXPECT_NE(csv_dump(a, sc.power), csv_dump(c, sc.power));
}

TEST(Engine, LossyLinksStillConverge)
{
    auto sc = star(120);
    for (auto& l : sc.links) {
        l.per = 0.1;
    }
    const auto trace = run(sc);
    EXPECT_TRUE(all_synchronized_frame(trace).has_value());
    std::size_t errors = 0;
    for (const auto& ev : trace.packet_events) {
        errors += ev.kind == PacketEventKind::ChannelError ? 1 : 0;
    }
    EXPECT_GT(errors, 0u);
}

TEST(Engine, MultiChannelSplitsDutyCycle)
{
    auto sc = star(60);
    sc.channels = 2;
    const auto trace = run(sc);
    const auto window = steady_state_window(trace);
    ASSERT_TRUE(window);
    const auto all = measure_duty_cycle(trace, sc.relay, *window);
    const auto ch0 = measure_duty_cycle(trace, sc.relay, *window, 0);
    const auto ch1 = measure_duty_cycle(trace, sc.relay, *window, 1);
    EXPECT_NEAR(ch0.total + ch1.total, all.total, 1e-12);
    EXPECT_GT(ch0.total, 0.0);
    EXPECT_GT(ch1.total, 0.0);
}

TEST(Engine, ValidationErrors)
{
    auto sc = star();
    sc.links.pop_back();
    EXPECT_THROW(run(sc), TopologyError);

    sc = star();
    sc.links.push_back({make_node_id(0), make_node_id(9)});
    EXPECT_THROW(validate(sc), ScenarioError);

    sc = star();
    sc.nodes.push_back({make_node_id(1), 0.0});
    EXPECT_THROW(validate(sc), ScenarioError);

    sc = star();
    sc.nodes.push_back({make_node_id(4), 0.0});
    sc.links.push_back({make_node_id(0), make_node_id(4)});
    EXPECT_THROW(validate(sc), ScenarioError);

    sc = star();
    sc.traffic.k = 0;
    EXPECT_THROW(validate(sc), ScenarioError);

    sc = star();
    sc.links[0].per = 1.5;
    EXPECT_THROW(validate(sc), ScenarioError);

    sc = star();
    sc.relay = make_node_id(7);
    EXPECT_THROW(validate(sc), ScenarioError);

    sc = star();
    sc.power.p_rx = 0.0;
    EXPECT_THROW(validate(sc), ScenarioError);

    EXPECT_NO_THROW(validate(star()));
}
