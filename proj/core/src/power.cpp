#include "loratdma/power.hpp"

#include <stdexcept>

namespace loratdma {

void validate(const PowerProfile& profile)
{
    if (profile.p_sleep < 0.0 || profile.p_rx < profile.p_sleep || profile.p_tx < profile.p_sleep) {
        throw std::invalid_argument("power profile needs 0 <= p_sleep <= p_rx and p_sleep <= p_tx");
    }
    if (profile.p_app < 0.0 || profile.tau_app < 0.0) {
        throw std::invalid_argument("power profile needs p_app >= 0 and tau_app >= 0");
    }
}

}  // namespace loratdma
