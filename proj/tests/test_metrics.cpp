#include "loratdma/metrics.hpp"

#include <gtest/gtest.h>

using namespace loratdma;

namespace {

const NodeId N0 = make_node_id(0);
const NodeId N1 = make_node_id(1);

SimulationTrace synthetic()
{
    SimulationTrace t;
    t.relay = N0;
    t.nodes = {N0, N1};
    t.frame_duration = 10.0;
    t.end_time = 40.0;
    t.k = 2;
    for (int f = 0; f < 4; ++f) {
        t.frame_starts.push_back({f, 10.0 * f});
    }
    using phy::RadioState;
    t.radio = {{N0, RadioState::Sleep, 0.0, 5.0},   {N0, RadioState::Transmit, 5.0, 6.0},
               {N0, RadioState::Receive, 6.0, 8.0}, {N0, RadioState::Sleep, 8.0, 40.0},
               {N1, RadioState::Sleep, 0.0, 40.0}};
    Transmission a;
    a.sender = N0;
    a.start_ns = 5'000'000'000;
    a.end_ns = 6'000'000'000;
    Transmission b = a;
    b.start_ns = 25'000'000'000;
    b.end_ns = 25'500'000'000;
    b.lorawan = true;
    b.channel = 1;
    t.transmissions = {a, b};
    t.app_runs = {{N0, 1.0, 2.0}, {N0, 39.5, 2.0}};
    t.mode_events = {{12.0, N1, protocol::NodeMode::Synchronized}};
    t.summary[N0].final_mode = protocol::NodeMode::Synchronized;
    t.summary[N1].final_mode = protocol::NodeMode::Synchronized;
    return t;
}

}  // namespace

TEST(Metrics, DutyCycle)
{
    const auto t = synthetic();
    const auto d = measure_duty_cycle(t, N0, {0.0, 40.0});
    EXPECT_DOUBLE_EQ(d.multihop, 1.0 / 40.0);
    EXPECT_DOUBLE_EQ(d.lorawan, 0.5 / 40.0);
    EXPECT_DOUBLE_EQ(d.total, 1.5 / 40.0);
    EXPECT_DOUBLE_EQ(measure_duty_cycle(t, N0, {5.5, 10.0}).total, 0.5 / 10.0);
    EXPECT_DOUBLE_EQ(measure_duty_cycle(t, N0, {0.0, 40.0}, 1).total, 0.5 / 40.0);
    EXPECT_DOUBLE_EQ(measure_duty_cycle(t, N1, {0.0, 40.0}).total, 0.0);
}

TEST(Metrics, AveragePower)
{
    const auto t = synthetic();
    const PowerProfile p{.p_sleep = 1.0, .p_rx = 3.0, .p_tx = 7.0, .p_app = 11.0, .tau_app = 2.0};
    EXPECT_DOUBLE_EQ(measure_avg_power(t, N1, p), 1.0);
    // 37 s asleep, 1 s transmit, 2 s receive, one app run of 2 s starting inside.
    const double expected = (37.0 * 1.0 + 7.0 + 2.0 * 3.0 + (11.0 - 1.0) * 2.0) / 40.0;
    EXPECT_DOUBLE_EQ(measure_avg_power(t, N0, p, TimeWindow{0.0, 39.0}), (36.0 + 7.0 + 6.0 + 20.0) / 39.0);
    EXPECT_DOUBLE_EQ(measure_avg_power(t, N0, p), expected + (11.0 - 1.0) * 2.0 / 40.0);
    const PowerProfile flat{.p_sleep = 2.0, .p_rx = 2.0, .p_tx = 2.0, .p_app = 2.0, .tau_app = 1.0};
    EXPECT_DOUBLE_EQ(measure_avg_power(t, N0, flat), 2.0);
    EXPECT_DOUBLE_EQ(measure_avg_power(t, N0, flat, TimeWindow{100.0, 10.0}), 2.0);
}

TEST(Metrics, SteadyStateWindow)
{
    const auto t = synthetic();
    EXPECT_EQ(all_synchronized_frame(t), 2);
    // Frame 2 is k-aligned but not strictly after sync; frame 4 is past the end.
    EXPECT_FALSE(steady_state_window(t));

    auto longer = t;
    for (int f = 4; f < 9; ++f) {
        longer.frame_starts.push_back({f, 10.0 * f});
    }
    longer.end_time = 95.0;
    const auto w = steady_state_window(longer);
    ASSERT_TRUE(w);
    EXPECT_DOUBLE_EQ(w->start, 40.0);
    EXPECT_DOUBLE_EQ(w->length, 40.0);

    longer.k = 3;
    const auto w3 = steady_state_window(longer);
    ASSERT_TRUE(w3);
    EXPECT_DOUBLE_EQ(w3->start, 30.0);
    EXPECT_DOUBLE_EQ(w3->length, 60.0);

    auto never = t;
    never.summary[N1].final_mode = protocol::NodeMode::Joining;
    EXPECT_FALSE(all_synchronized_frame(never));
    EXPECT_FALSE(steady_state_window(never));
}

TEST(Metrics, SyncSeriesAcrossHops)
{
    SimulationTrace t;
    const NodeId n2 = make_node_id(2);
    timebase::VirtualClock c0{};
    timebase::VirtualClock c1{};
    c1.epoch_global = 10e-6;
    timebase::VirtualClock c2{};
    c2.epoch_global = -15e-6;
    t.clock_anchors = {{N0, 0.0, c0}, {N1, 0.0, c1}, {n2, 0.0, c2}};
    t.sync_samples = {{3, N0, N1, 1000, 1.0, -10e-6}, {3, N1, n2, 2000, 2.0, 25e-6}};
    EXPECT_EQ(measure_sync_error(t, N0, N1), (std::vector<double>{-10e-6}));
    EXPECT_EQ(measure_sync_error(t, N1, n2), (std::vector<double>{25e-6}));
    const auto far = measure_sync_error(t, N0, n2);
    ASSERT_EQ(far.size(), 1u);
    EXPECT_NEAR(far[0], 15e-6, 1e-12);
    EXPECT_TRUE(measure_sync_error(t, N0, make_node_id(5)).empty());
}

TEST(Metrics, QueueDepths)
{
    SimulationTrace t;
    for (int f = 0; f < 10; ++f) {
        t.queue_samples.push_back({f, f * 1.0, N0, static_cast<std::size_t>(f * 2), 0});
        t.queue_samples.push_back({f, f * 1.0, N1, 1, 0});
    }
    EXPECT_EQ(uplink_queue_depths(t, N0, 2, 3), (std::vector<std::size_t>{4, 10, 16}));
    EXPECT_EQ(uplink_queue_depths(t, N1, 8, 1), (std::vector<std::size_t>{1, 1}));
}
