#include "loratdma/planner.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include <fmt/format.h>

namespace loratdma::planner {

double app_period(int k, int n_slots, double slot_seconds)
{
    return static_cast<double>(k) * static_cast<double>(n_slots) * slot_seconds;
}

double mean_power(const PowerProfile& p, double t_bcn, double slot_seconds, int n_slots, int k,
                  double relative_drift_ppm)
{
    const double t_f = slot_seconds * n_slots;
    const double d_r = relative_drift_ppm * 1e-6;
    return p.p_sleep + (p.p_rx + p.p_tx - 2.0 * p.p_sleep) * t_bcn / t_f + (p.p_rx - p.p_sleep) * 2.0 * d_r +
           (p.p_app - p.p_sleep) * p.tau_app / (k * t_f);
}

bool check_capacity(int n, int k)
{
    return n <= k;
}

double duty_cycle_estimate(int m_i, int k, int c, double t_app, double t_ack, double t_data, double t_bcn)
{
    return (m_i * t_ack + (1 + m_i) * t_data + k * t_bcn) / (t_app * c);
}

double min_app_period(int m_i, int k, int c, double duty_limit, double t_ack, double t_data, double t_bcn,
                      std::optional<int> n, std::optional<double> frame_time)
{
    const double airtime = m_i * t_ack + (1 + m_i) * t_data + k * t_bcn;
    double bound = airtime / (duty_limit * c);
    if (n && frame_time) {
        bound = std::max(bound, *n * *frame_time);
    }
    return bound;
}

FrameChoice recommend_frame(double t_app_target, int n, double slot_seconds, int max_n_slots)
{
    if (n < 1 || slot_seconds <= 0.0 || max_n_slots < 1) {
        throw InfeasibleError("recommend_frame needs n >= 1, a positive slot and max_N >= 1");
    }
    if (t_app_target < n * slot_seconds) {
        throw InfeasibleError(fmt::format("period {:.3f} s is shorter than n * T_SL = {:.3f} s", t_app_target,
                                          n * slot_seconds));
    }
    // The relative slack absorbs rounding in slot durations quoted to a few
    // digits.
    const double ratio = t_app_target / (n * slot_seconds) * (1.0 + 1e-6);
    const int upper = static_cast<int>(std::min<double>(max_n_slots, std::floor(ratio)));
    for (int n_slots = upper; n_slots >= 1; --n_slots) {
        const auto k = static_cast<int>(std::lround(t_app_target / (n_slots * slot_seconds)));
        if (k >= n) {
            return {k, n_slots, app_period(k, n_slots, slot_seconds)};
        }
    }
    throw InfeasibleError(fmt::format("no frame size up to {} slots gives k >= {}", max_n_slots, n));
}

std::map<NodeId, int> subtree_sizes(const Topology& topology, NodeId root)
{
    const auto order = topology.joinable_from(root);
    std::map<NodeId, NodeId> parent;
    std::set<NodeId> seen{root};
    std::deque<NodeId> frontier{root};
    while (!frontier.empty()) {
        const NodeId p = frontier.front();
        frontier.pop_front();
        for (const NodeId child : topology.receivers_of(p)) {
            if (seen.contains(child) || topology.find(child, p) == nullptr) {
                continue;
            }
            seen.insert(child);
            parent[child] = p;
            frontier.push_back(child);
        }
    }
    std::map<NodeId, int> sizes;
    for (const NodeId id : order) {
        sizes[id] = 0;
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (auto p = parent.find(*it); p != parent.end()) {
            sizes[p->second] += sizes[*it] + 1;
        }
    }
    return sizes;
}

double NetworkPlan::relay_duty() const
{
    for (const auto& load : loads) {
        if (load.relay) {
            return load.duty;
        }
    }
    return 0.0;
}

double NetworkPlan::max_duty() const
{
    double out = 0.0;
    for (const auto& load : loads) {
        out = std::max(out, load.duty);
    }
    return out;
}

NetworkPlan make_plan(const PlanRequest& req)
{
    phy::validate(req.radio);
    validate(req.power);
    if (req.n < 1 || req.channels < 1 || !(req.duty_limit > 0.0 && req.duty_limit <= 1.0)) {
        throw std::invalid_argument("plan needs n >= 1, channels >= 1 and a duty limit in (0, 1]");
    }

    NetworkPlan plan;
    plan.n = req.n;
    plan.c = req.channels;
    plan.t_sl = req.slot_seconds;
    plan.duty_limit = req.duty_limit;
    if (req.k) {
        if (*req.k < 1) {
            throw std::invalid_argument("k must be >= 1");
        }
        plan.k = *req.k;
        plan.n_slots = req.max_n_slots;
    } else {
        const FrameChoice choice = recommend_frame(req.t_app_target, req.n, req.slot_seconds, req.max_n_slots);
        plan.k = choice.k;
        plan.n_slots = choice.n_slots;
    }
    plan.t_f = plan.n_slots * plan.t_sl;
    plan.t_app = app_period(plan.k, plan.n_slots, plan.t_sl);

    plan.t_bcn = phy::time_on_air(kBeaconBytes, req.radio).seconds;
    plan.t_ack = phy::time_on_air(kAckBytes, req.radio).seconds;
    plan.t_data = phy::time_on_air(kMacHeaderBytes + req.app_payload_bytes, req.radio).seconds;
    plan.t_lorawan = phy::lorawan_time_on_air(req.app_payload_bytes, req.radio).seconds;

    std::vector<int> subtrees = req.node_subtrees;
    if (subtrees.empty()) {
        subtrees.assign(static_cast<std::size_t>(req.n - 1), 0);
    }
    const int relay_m = req.n - 1;
    plan.loads.push_back({true, relay_m,
                          duty_cycle_estimate(relay_m, plan.k, plan.c, plan.t_app, plan.t_ack, plan.t_lorawan,
                                              plan.t_bcn)});
    for (const int m : subtrees) {
        plan.loads.push_back(
            {false, m, duty_cycle_estimate(m, plan.k, plan.c, plan.t_app, plan.t_ack, plan.t_data, plan.t_bcn)});
    }

    plan.min_t_app = min_app_period(relay_m, plan.k, plan.c, req.duty_limit, plan.t_ack, plan.t_lorawan, plan.t_bcn,
                                    req.n, plan.t_f);
    plan.p_tot = mean_power(req.power, plan.t_bcn, plan.t_sl, plan.n_slots, plan.k, req.drift_ppm);

    if (!check_capacity(req.n, plan.k)) {
        plan.feasible = false;
        plan.binding_constraint = fmt::format("capacity: n > k ({} > {})", req.n, plan.k);
    } else if (plan.max_duty() > req.duty_limit) {
        plan.feasible = false;
        plan.binding_constraint = fmt::format("duty-cycle: {:.3f} % exceeds the {:.3f} % limit",
                                              plan.max_duty() * 100.0, req.duty_limit * 100.0);
    }
    return plan;
}

}  // namespace loratdma::planner
