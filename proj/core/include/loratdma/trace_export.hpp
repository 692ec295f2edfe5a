#pragma once

#include "loratdma/power.hpp"
#include "loratdma/trace.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace loratdma {

// node,state,start_s,end_s
void write_radio_csv(std::ostream& out, const SimulationTrace& trace);

// time_s,event,node,peer,kind,dest,origin,seq,size,airtime_s,channel
void write_packets_csv(std::ostream& out, const SimulationTrace& trace);

// frame,parent,child,epsilon_us
void write_sync_csv(std::ostream& out, const SimulationTrace& trace);

// One row per node over the steady-state window (whole trace if the network
// never settles).
void write_summary_csv(std::ostream& out, const SimulationTrace& trace, const PowerProfile& power);

// Human-readable digest: per-node duty cycle and power, max |sync error| per
// parent-child pair and against the relay.
std::string format_report(const SimulationTrace& trace, const PowerProfile& power);

// Writes radio.csv, packets.csv, sync.csv, summary.csv and report.txt into
// `dir`, creating it if needed. Returns the written paths.
std::vector<std::filesystem::path> export_trace(const SimulationTrace& trace, const PowerProfile& power,
                                                const std::filesystem::path& dir);

}  // namespace loratdma
