#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace loratdma {

// One-byte node address as carried on air.
enum class NodeId : std::uint8_t {};

constexpr int to_int(NodeId id) { return static_cast<int>(id); }
constexpr NodeId make_node_id(int value) { return static_cast<NodeId>(static_cast<std::uint8_t>(value)); }

enum class PacketKind : std::uint8_t { Beacon, JoinRequest, JoinAccept, UpData, DownData, Ack };

std::string_view to_string(PacketKind kind);

inline constexpr int kMacHeaderBytes = 5;
inline constexpr int kBeaconBytes = 3;
inline constexpr int kAckBytes = 2;
inline constexpr int kMaxFrameBytes = 64;
inline constexpr int kMaxDataPayloadBytes = kMaxFrameBytes - kMacHeaderBytes;
inline constexpr std::uint8_t kHeaderSeqMask = 0x1F;

// On-air layouts:
//   Beacon      [network_id][sender_id][beacon slot index]
//   Ack         [sender_id][seq]
//   all others  [network_id][sender_id][dest_id][origin_id][kind:3|seq:5][payload...]
// Beacons reuse the seq byte for the sender's beacon slot so that a node that
// has never joined can align its frame from a single beacon.
struct MacPacket {
    PacketKind kind = PacketKind::Beacon;
    std::uint8_t network_id = 0;
    NodeId sender{};
    NodeId dest{};
    NodeId origin{};
    std::uint8_t seq = 0;
    std::vector<std::uint8_t> payload;

    bool operator==(const MacPacket&) const = default;
};

MacPacket make_beacon(std::uint8_t network_id, NodeId sender, int beacon_slot);
MacPacket make_ack(NodeId sender, std::uint8_t seq);

int on_air_size(const MacPacket& packet);

// Throws std::length_error when the packet exceeds the 64-byte slot cap.
std::vector<std::uint8_t> encode(const MacPacket& packet);

struct DecodeResult {
    std::optional<MacPacket> packet;
    std::string_view error;
};

DecodeResult decode(std::span<const std::uint8_t> bytes);

}  // namespace loratdma
