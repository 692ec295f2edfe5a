#pragma once

#include <cstdint>

namespace loratdma::timebase {

inline constexpr double kDefaultTickRateHz = 32768.0;
inline constexpr double kMaxDriftPpm = 500.0;

// A node's oscillator as seen from global time.
//
// The clock ticks at (1/tick_rate_hz)(1 + drift_ppm 1e-6) global seconds per
// tick. tick_counter is the counter value latched at global instant
// epoch_global; both are moved together on resync so that the oscillator
// phase is preserved, exactly as a free-running crystal whose counter gets
// overwritten.
struct VirtualClock {
    double tick_rate_hz = kDefaultTickRateHz;
    double drift_ppm = 0.0;
    std::int64_t tick_counter = 0;
    double epoch_global = 0.0;
};

// Throws std::invalid_argument if the rate is not positive or |drift| exceeds
// the sanity cap.
void validate(const VirtualClock& clock);

double local_tick_duration(const VirtualClock& clock);

// Global instant at which the clock reads `tick`. Throws std::domain_error for
// ticks before the current anchor.
double ticks_to_global(const VirtualClock& clock, std::int64_t tick);

// Last tick the clock has reached at global instant t (floor).
std::int64_t global_to_tick(const VirtualClock& clock, double t);

// First tick reached at or after t.
std::int64_t next_tick_at_or_after(const VirtualClock& clock, double t);

// Re-anchors the counter so that expected_tick falls on the oscillator edge
// closest to reference_global. Residual |offset| is at most half a tick.
VirtualClock resync(const VirtualClock& clock, double reference_global,
                    std::int64_t expected_tick);

// ticks_to_global(clock, tick) - reference_global, without the anchor check.
double offset_from(const VirtualClock& clock, std::int64_t tick, double reference_global);

// Changes the oscillator frequency from `at_tick` onward, keeping the tick
// to global mapping continuous at that tick.
VirtualClock with_drift(const VirtualClock& clock, double drift_ppm, std::int64_t at_tick);

struct GuardConfig {
    double base_guard = 0.010;
    double widen_factor = 2.0;
    int max_misses = 4;
};

void validate(const GuardConfig& guard);

// Guard window after `consecutive_misses` missed beacons, never above cap.
double effective_guard(const GuardConfig& guard, int consecutive_misses, double cap);

// Smallest guard window keeping a drifting child inside its reception window
// for a whole frame: 2 D_R T_F.
double min_guard(double relative_drift_ppm, double frame_time);

}  // namespace loratdma::timebase
