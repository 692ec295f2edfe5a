#include "loratdma/timebase.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace loratdma::timebase {

void validate(const VirtualClock& clock)
{
    if (!(clock.tick_rate_hz > 0.0)) {
        throw std::invalid_argument("tick rate must be positive");
    }
    if (std::abs(clock.drift_ppm) > kMaxDriftPpm) {
        throw std::invalid_argument("clock drift exceeds the 500 ppm sanity cap");
    }
}

double local_tick_duration(const VirtualClock& clock)
{
    return (1.0 / clock.tick_rate_hz) * (1.0 + clock.drift_ppm * 1e-6);
}

double offset_from(const VirtualClock& clock, std::int64_t tick, double reference_global)
{
    const auto elapsed = static_cast<double>(tick - clock.tick_counter);
    return (clock.epoch_global - reference_global) + elapsed * local_tick_duration(clock);
}

double ticks_to_global(const VirtualClock& clock, std::int64_t tick)
{
    if (tick < clock.tick_counter) {
        throw std::domain_error("tick precedes the clock anchor");
    }
    return clock.epoch_global +
           static_cast<double>(tick - clock.tick_counter) * local_tick_duration(clock);
}

std::int64_t global_to_tick(const VirtualClock& clock, double t)
{
    const double elapsed = (t - clock.epoch_global) / local_tick_duration(clock);
    // Absorb representation error right at an edge.
    return clock.tick_counter + static_cast<std::int64_t>(std::floor(elapsed + 1e-9));
}

std::int64_t next_tick_at_or_after(const VirtualClock& clock, double t)
{
    const double elapsed = (t - clock.epoch_global) / local_tick_duration(clock);
    return clock.tick_counter + static_cast<std::int64_t>(std::ceil(elapsed - 1e-9));
}

VirtualClock resync(const VirtualClock& clock, double reference_global, std::int64_t expected_tick)
{
    const double tick = local_tick_duration(clock);
    const double edges = std::round((reference_global - clock.epoch_global) / tick);
    VirtualClock out = clock;
    out.epoch_global = clock.epoch_global + edges * tick;
    out.tick_counter = expected_tick;
    return out;
}

VirtualClock with_drift(const VirtualClock& clock, double drift_ppm, std::int64_t at_tick)
{
    VirtualClock out = clock;
    out.epoch_global = clock.epoch_global +
                       static_cast<double>(at_tick - clock.tick_counter) * local_tick_duration(clock);
    out.tick_counter = at_tick;
    out.drift_ppm = drift_ppm;
    validate(out);
    return out;
}

void validate(const GuardConfig& guard)
{
    if (!(guard.base_guard > 0.0)) {
        throw std::invalid_argument("guard time must be positive");
    }
    if (guard.widen_factor < 1.0) {
        throw std::invalid_argument("guard widen factor must be at least 1");
    }
    if (guard.max_misses < 1) {
        throw std::invalid_argument("max_misses must be at least 1");
    }
}

double effective_guard(const GuardConfig& guard, int consecutive_misses, double cap)
{
    const double widened = guard.base_guard * std::pow(guard.widen_factor, std::max(consecutive_misses, 0));
    return std::min(widened, cap);
}

double min_guard(double relative_drift_ppm, double frame_time)
{
    return 2.0 * relative_drift_ppm * 1e-6 * frame_time;
}

}  // namespace loratdma::timebase
