#include "loratdma/channel.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <stdexcept>

namespace loratdma {

void Topology::add_link(NodeId from, NodeId to, Link link)
{
    links_[{to_int(from), to_int(to)}] = link;
}

const Link* Topology::find(NodeId from, NodeId to) const
{
    auto it = links_.find({to_int(from), to_int(to)});
    return it == links_.end() ? nullptr : &it->second;
}

std::vector<NodeId> Topology::receivers_of(NodeId from) const
{
    std::vector<NodeId> out;
    for (const auto& [key, link] : links_) {
        if (key.first == to_int(from)) {
            out.push_back(make_node_id(key.second));
        }
    }
    return out;
}

std::vector<NodeId> Topology::joinable_from(NodeId root) const
{
    std::set<int> seen{to_int(root)};
    std::deque<int> frontier{to_int(root)};
    std::vector<NodeId> order{root};
    while (!frontier.empty()) {
        const int parent = frontier.front();
        frontier.pop_front();
        for (const auto& [key, link] : links_) {
            if (key.first != parent || seen.contains(key.second)) {
                continue;
            }
            if (!links_.contains({key.second, parent})) {
                continue;
            }
            seen.insert(key.second);
            frontier.push_back(key.second);
            order.push_back(make_node_id(key.second));
        }
    }
    return order;
}

std::string_view to_string(RxOutcome outcome)
{
    switch (outcome) {
    case RxOutcome::Received: return "received";
    case RxOutcome::Collision: return "collision";
    case RxOutcome::ChannelError: return "channel_error";
    case RxOutcome::OutsideWindow: return "outside_window";
    }
    return "unknown";
}

std::vector<Delivery> deliver(const Transmission& tx, std::span<const Transmission> others,
                              std::span<const Listener> listeners, const Topology& topology, Rng& rng)
{
    std::vector<Delivery> out;
    out.reserve(listeners.size());
    for (const auto& listener : listeners) {
        Delivery d{listener.id, RxOutcome::Received};
        const Link* link = topology.find(tx.sender, listener.id);
        if (link == nullptr || listener.channel != tx.channel || tx.start_ns < listener.open_ns ||
            tx.start_ns > listener.latest_start_ns) {
            d.outcome = RxOutcome::OutsideWindow;
            out.push_back(d);
            continue;
        }
        const bool collided = std::any_of(others.begin(), others.end(), [&](const Transmission& o) {
            return o.id != tx.id && o.sender != listener.id && o.channel == tx.channel && !o.lorawan &&
                   o.start_ns < tx.end_ns && o.end_ns > tx.start_ns && topology.find(o.sender, listener.id);
        });
        if (collided) {
            d.outcome = RxOutcome::Collision;
        } else if (rng.bernoulli(link->per)) {
            d.outcome = RxOutcome::ChannelError;
        }
        out.push_back(d);
    }
    return out;
}

}  // namespace loratdma
