#include "loratdma/phy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace loratdma::phy {

void validate(const RadioParams& params)
{
    if (params.spreading_factor < 7 || params.spreading_factor > 12) {
        throw std::invalid_argument("spreading factor must be within 7..12, got " +
                                    std::to_string(params.spreading_factor));
    }
    if (params.bandwidth_hz <= 0) {
        throw std::invalid_argument("bandwidth must be positive");
    }
    if (params.coding_rate_denominator < 5 || params.coding_rate_denominator > 8) {
        throw std::invalid_argument("coding rate denominator must be within 5..8, got " +
                                    std::to_string(params.coding_rate_denominator));
    }
    if (params.preamble_symbols < 1) {
        throw std::invalid_argument("preamble must have at least one symbol");
    }
}

std::string_view to_string(RadioState state)
{
    switch (state) {
    case RadioState::Sleep: return "sleep";
    case RadioState::Receive: return "rx";
    case RadioState::Transmit: return "tx";
    }
    return "?";
}

std::int64_t Airtime::nanoseconds() const
{
    return std::llround(seconds * 1e9);
}

Airtime symbol_time(const RadioParams& params)
{
    validate(params);
    return Airtime{std::ldexp(1.0, params.spreading_factor) / params.bandwidth_hz};
}

Airtime time_on_air(int payload_bytes, const RadioParams& params)
{
    validate(params);
    if (payload_bytes < 0 || payload_bytes > kMaxPhyPayloadBytes) {
        throw std::out_of_range("payload of " + std::to_string(payload_bytes) +
                                " bytes does not fit a LoRa frame (max " +
                                std::to_string(kMaxPhyPayloadBytes) + ")");
    }

    const int sf = params.spreading_factor;
    const int ih = params.explicit_header ? 0 : 1;
    const int crc = params.crc_on ? 1 : 0;
    const int de = params.low_data_rate_opt ? 1 : 0;

    // Integer ceiling keeps the symbol count exact.
    const int numerator = 8 * payload_bytes - 4 * sf + 28 + 16 * crc - 20 * ih;
    const int denominator = 4 * (sf - 2 * de);
    int blocks = 0;
    if (numerator > 0) {
        blocks = (numerator + denominator - 1) / denominator;
    }
    const int payload_symbols = 8 + std::max(blocks * params.coding_rate_denominator, 0);
    const double preamble_symbols = params.preamble_symbols + 4.25;

    return Airtime{(preamble_symbols + payload_symbols) * symbol_time(params).seconds};
}

Airtime lorawan_time_on_air(int app_payload_bytes, const RadioParams& params)
{
    if (app_payload_bytes < 0) {
        throw std::out_of_range("application payload cannot be negative");
    }
    return time_on_air(app_payload_bytes + kLoRaWanOverheadBytes, params);
}

}  // namespace loratdma::phy
