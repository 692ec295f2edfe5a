#include "loratdma/packet.hpp"

#include <stdexcept>
#include <string>

namespace loratdma {

namespace {

std::uint8_t header_kind_code(PacketKind kind)
{
    switch (kind) {
    case PacketKind::JoinRequest: return 1;
    case PacketKind::JoinAccept: return 2;
    case PacketKind::UpData: return 3;
    case PacketKind::DownData: return 4;
    default: break;
    }
    throw std::logic_error("packet kind has no header encoding");
}

std::optional<PacketKind> kind_from_code(std::uint8_t code)
{
    switch (code) {
    case 1: return PacketKind::JoinRequest;
    case 2: return PacketKind::JoinAccept;
    case 3: return PacketKind::UpData;
    case 4: return PacketKind::DownData;
    default: return std::nullopt;
    }
}

}  // namespace

std::string_view to_string(PacketKind kind)
{
    switch (kind) {
    case PacketKind::Beacon: return "beacon";
    case PacketKind::JoinRequest: return "join_request";
    case PacketKind::JoinAccept: return "join_accept";
    case PacketKind::UpData: return "up_data";
    case PacketKind::DownData: return "down_data";
    case PacketKind::Ack: return "ack";
    }
    return "?";
}

MacPacket make_beacon(std::uint8_t network_id, NodeId sender, int beacon_slot)
{
    MacPacket p;
    p.kind = PacketKind::Beacon;
    p.network_id = network_id;
    p.sender = sender;
    p.seq = static_cast<std::uint8_t>(beacon_slot);
    return p;
}

MacPacket make_ack(NodeId sender, std::uint8_t seq)
{
    MacPacket p;
    p.kind = PacketKind::Ack;
    p.sender = sender;
    p.seq = seq;
    return p;
}

int on_air_size(const MacPacket& packet)
{
    switch (packet.kind) {
    case PacketKind::Beacon: return kBeaconBytes;
    case PacketKind::Ack: return kAckBytes;
    default: return kMacHeaderBytes + static_cast<int>(packet.payload.size());
    }
}

std::vector<std::uint8_t> encode(const MacPacket& packet)
{
    const int size = on_air_size(packet);
    if (size > kMaxFrameBytes) {
        throw std::length_error("packet of " + std::to_string(size) + " bytes exceeds the " +
                                std::to_string(kMaxFrameBytes) + "-byte slot payload cap");
    }

    std::vector<std::uint8_t> out;
    out.reserve(static_cast<std::size_t>(size));
    switch (packet.kind) {
    case PacketKind::Beacon:
        out = {packet.network_id, static_cast<std::uint8_t>(packet.sender), packet.seq};
        break;
    case PacketKind::Ack:
        out = {static_cast<std::uint8_t>(packet.sender), packet.seq};
        break;
    default:
        out = {packet.network_id,
               static_cast<std::uint8_t>(packet.sender),
               static_cast<std::uint8_t>(packet.dest),
               static_cast<std::uint8_t>(packet.origin),
               static_cast<std::uint8_t>((header_kind_code(packet.kind) << 5) |
                                         (packet.seq & kHeaderSeqMask))};
        out.insert(out.end(), packet.payload.begin(), packet.payload.end());
        break;
    }
    return out;
}

DecodeResult decode(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() > static_cast<std::size_t>(kMaxFrameBytes)) {
        return {std::nullopt, "frame exceeds slot payload cap"};
    }
    MacPacket p;
    if (bytes.size() == kAckBytes) {
        p.kind = PacketKind::Ack;
        p.sender = static_cast<NodeId>(bytes[0]);
        p.seq = bytes[1];
        return {p, {}};
    }
    if (bytes.size() == kBeaconBytes) {
        p.kind = PacketKind::Beacon;
        p.network_id = bytes[0];
        p.sender = static_cast<NodeId>(bytes[1]);
        p.seq = bytes[2];
        return {p, {}};
    }
    if (bytes.size() < kMacHeaderBytes) {
        return {std::nullopt, "truncated header"};
    }
    const auto kind = kind_from_code(static_cast<std::uint8_t>(bytes[4] >> 5));
    if (!kind) {
        return {std::nullopt, "unknown packet kind"};
    }
    p.kind = *kind;
    p.network_id = bytes[0];
    p.sender = static_cast<NodeId>(bytes[1]);
    p.dest = static_cast<NodeId>(bytes[2]);
    p.origin = static_cast<NodeId>(bytes[3]);
    p.seq = bytes[4] & kHeaderSeqMask;
    p.payload.assign(bytes.begin() + kMacHeaderBytes, bytes.end());
    return {p, {}};
}

}  // namespace loratdma
