#pragma once

#include "loratdma/channel.hpp"
#include "loratdma/phy.hpp"
#include "loratdma/power.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace loratdma::planner {

// T_app = k N T_SL.
double app_period(int k, int n_slots, double slot_seconds);

// Lower bound of the mean power of a synchronized device, with the guard time
// at its smallest admissible value 2 D_R T_F.
double mean_power(const PowerProfile& profile, double t_bcn, double slot_seconds, int n_slots, int k,
                  double relative_drift_ppm);

// n devices fit when each gets its LoRaWAN slot once per period: n <= k.
bool check_capacity(int n, int k);

// Transmit duty cycle of a node with m_i descendants.
double duty_cycle_estimate(int m_i, int k, int c, double t_app, double t_ack, double t_data, double t_bcn);

// Smallest T_app meeting the duty limit and, when n and the frame time are
// given, the capacity bound n T_F.
double min_app_period(int m_i, int k, int c, double duty_limit, double t_ack, double t_data, double t_bcn,
                      std::optional<int> n = std::nullopt, std::optional<double> frame_time = std::nullopt);

class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FrameChoice {
    int k = 1;
    int n_slots = 1;
    double t_app = 0.0;
};

// Largest frame (fewest frames per period) with k >= n for the target
// period. Throws InfeasibleError when none exists.
FrameChoice recommend_frame(double t_app_target, int n, double slot_seconds, int max_n_slots);

// m_i for every node of the BFS tree rooted at `root`: descendants, excluding
// the node itself.
std::map<NodeId, int> subtree_sizes(const Topology& topology, NodeId root);

struct PlanRequest {
    int n = 1;
    double t_app_target = 0.0;
    std::optional<int> k;
    int max_n_slots = 90;
    double slot_seconds = 21281.0 / 32768.0;
    int channels = 1;
    double duty_limit = 0.01;
    double drift_ppm = 0.0;
    int app_payload_bytes = 24;
    phy::RadioParams radio;
    PowerProfile power;
    // m_i of every non-relay node; the relay carries the rest. Empty means a
    // star: every other node is a leaf.
    std::vector<int> node_subtrees;
};

struct NodeLoad {
    bool relay = false;
    int m = 0;
    double duty = 0.0;
};

struct NetworkPlan {
    int k = 1;
    int n_slots = 1;
    int n = 1;
    int c = 1;
    double t_sl = 0.0;
    double t_f = 0.0;
    double t_app = 0.0;
    double min_t_app = 0.0;
    double duty_limit = 0.0;
    double p_tot = 0.0;
    double t_bcn = 0.0;
    double t_ack = 0.0;
    double t_data = 0.0;
    double t_lorawan = 0.0;
    std::vector<NodeLoad> loads;
    bool feasible = true;
    std::string binding_constraint;

    [[nodiscard]] double relay_duty() const;
    [[nodiscard]] double max_duty() const;
};

// Throws InfeasibleError when no frame fits the target period; capacity and
// duty violations are reported through feasible/binding_constraint.
NetworkPlan make_plan(const PlanRequest& request);

}  // namespace loratdma::planner
