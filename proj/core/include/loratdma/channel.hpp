#pragma once

#include "loratdma/packet.hpp"
#include "loratdma/protocol.hpp"
#include "loratdma/rng.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace loratdma {

struct Link {
    double per = 0.0;
    double rssi_dbm = -60.0;
};

// Directed connectivity graph.
class Topology {
public:
    void add_link(NodeId from, NodeId to, Link link);
    [[nodiscard]] const Link* find(NodeId from, NodeId to) const;
    [[nodiscard]] std::vector<NodeId> receivers_of(NodeId from) const;

    // Nodes reachable from `root` following links in both directions of an
    // exchange (a node joins through a parent it can hear and that hears it).
    [[nodiscard]] std::vector<NodeId> joinable_from(NodeId root) const;

private:
    std::map<std::pair<int, int>, Link> links_;
};

struct Transmission {
    std::uint64_t id = 0;
    NodeId sender{};
    MacPacket packet;
    int channel = 0;
    std::int64_t start_ns = 0;
    std::int64_t end_ns = 0;
    std::int64_t sender_frame = 0;
    protocol::TxPurpose purpose = protocol::TxPurpose::Beacon;
    bool lorawan = false;

    [[nodiscard]] double start() const { return static_cast<double>(start_ns) * 1e-9; }
    [[nodiscard]] double end() const { return static_cast<double>(end_ns) * 1e-9; }
};

enum class RxOutcome : std::uint8_t { Received, Collision, ChannelError, OutsideWindow };

std::string_view to_string(RxOutcome outcome);

// A reception window: the preamble must start within [open_ns, latest_start_ns].
struct Listener {
    NodeId id{};
    std::int64_t open_ns = 0;
    std::int64_t latest_start_ns = 0;
    int channel = 0;
};

struct Delivery {
    NodeId listener{};
    RxOutcome outcome = RxOutcome::Received;
};

// Outcome of `tx` at each listener. A transmission is lost when it starts
// outside the window, when any other transmission audible at the listener
// overlaps it on the same channel (no capture), or by the link's packet error
// rate.
std::vector<Delivery> deliver(const Transmission& tx, std::span<const Transmission> others,
                              std::span<const Listener> listeners, const Topology& topology, Rng& rng);

}  // namespace loratdma
