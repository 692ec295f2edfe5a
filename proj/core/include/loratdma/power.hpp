#pragma once

#include "loratdma/phy.hpp"

namespace loratdma {

// State power draws in watts and the application's active time per sample.
// Defaults are a typical SX127x end device.
struct PowerProfile {
    double p_sleep = 0.01e-3;
    double p_rx = 36e-3;
    double p_tx = 120e-3;
    double p_app = 30e-3;
    double tau_app = 1.0;

    [[nodiscard]] double state_power(phy::RadioState state) const
    {
        switch (state) {
        case phy::RadioState::Receive: return p_rx;
        case phy::RadioState::Transmit: return p_tx;
        case phy::RadioState::Sleep: break;
        }
        return p_sleep;
    }
};

// Throws std::invalid_argument unless p_rx >= p_sleep, p_tx >= p_sleep and
// tau_app >= 0.
void validate(const PowerProfile& profile);

}  // namespace loratdma
