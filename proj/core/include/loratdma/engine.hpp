#pragma once

#include "loratdma/channel.hpp"
#include "loratdma/power.hpp"
#include "loratdma/protocol.hpp"
#include "loratdma/trace.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace loratdma {

struct NodeSpec {
    NodeId id{};
    double drift_ppm = 0.0;
    // Standard deviation of a per-frame drift perturbation. 0 disables it.
    double drift_jitter_ppm = 0.0;
};

struct LinkSpec {
    NodeId from{};
    NodeId to{};
    double per = 0.0;
    double rssi_dbm = -60.0;
    bool symmetric = true;
};

struct TrafficConfig {
    // Frames per application sample.
    int k = 4;
    // Queue each sample for delivery to the relay. When false the
    // application still runs but sends nothing.
    bool uplink = true;
    // Relay sends DownData to one joined node every this many frames, 0 = off.
    int downlink_period_frames = 0;
    int downlink_payload_bytes = 8;
};

struct Scenario {
    protocol::MacConfig mac;
    NodeId relay{};
    std::vector<NodeSpec> nodes;
    std::vector<LinkSpec> links;
    int channels = 1;
    TrafficConfig traffic;
    std::int64_t frames = 100;
    std::uint64_t seed = 1;
    PowerProfile power{.p_sleep = 0.01e-3, .p_rx = 36e-3, .p_tx = 120e-3, .p_app = 30e-3, .tau_app = 1.0};
};

class ScenarioError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Some node cannot reach the relay.
class TopologyError : public ScenarioError {
public:
    using ScenarioError::ScenarioError;
};

// Throws ScenarioError (or TopologyError) describing the first problem found.
void validate(const Scenario& scenario);

Topology build_topology(const Scenario& scenario);

// Runs the scenario for scenario.frames relay frames. Deterministic for a
// given scenario and seed.
SimulationTrace run(const Scenario& scenario);

// Relay (id 0, drifts_ppm[0]) plus one child per further entry, all in range
// of the relay.
Scenario make_star(std::span<const double> drifts_ppm);

// Chain 0-1-2-... where each node only hears its neighbours.
Scenario make_line(std::span<const double> drifts_ppm);

}  // namespace loratdma
