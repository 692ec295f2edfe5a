#pragma once

#include <compare>
#include <cstdint>
#include <string_view>

namespace loratdma::phy {

// LoRa modulation settings that determine airtime.
struct RadioParams {
    int spreading_factor = 9;
    int bandwidth_hz = 125000;
    int coding_rate_denominator = 5;  // coding rate 4/x
    int preamble_symbols = 8;
    bool explicit_header = true;
    bool crc_on = true;
    bool low_data_rate_opt = false;
};

// Throws std::invalid_argument on out-of-range fields.
void validate(const RadioParams& params);

enum class RadioState : std::uint8_t { Sleep, Receive, Transmit };

std::string_view to_string(RadioState state);

// Duration a frame occupies the channel, in seconds.
struct Airtime {
    double seconds = 0.0;

    [[nodiscard]] double milliseconds() const { return seconds * 1e3; }
    [[nodiscard]] std::int64_t nanoseconds() const;

    auto operator<=>(const Airtime&) const = default;
};

inline constexpr int kMaxPhyPayloadBytes = 255;

// Bytes the LoRaWAN stack adds around the application payload in the best
// case (MHDR, FHDR without options, FPort, MIC).
inline constexpr int kLoRaWanOverheadBytes = 12;

// 2^SF / BW.
Airtime symbol_time(const RadioParams& params);

// Semtech airtime formula. Throws std::out_of_range when payload_bytes is
// negative or exceeds the PHY maximum.
Airtime time_on_air(int payload_bytes, const RadioParams& params);

Airtime lorawan_time_on_air(int app_payload_bytes, const RadioParams& params);

}  // namespace loratdma::phy
