#include "netrel/network.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"

namespace netrel {

TransportNetwork::TransportNetwork(std::vector<int> nodes, std::vector<Roadway> links,
                                   int source, int terminal)
    : nodes_(std::move(nodes)), links_(std::move(links)), source_(source), terminal_(terminal) {
    if (source_ == terminal_)
        throw ValidationError("source and terminal must differ");
    for (size_t i = 0; i < nodes_.size(); ++i) {
        if (!node_index_.emplace(nodes_[i], static_cast<int>(i)).second)
            throw ValidationError("duplicate node ID " + std::to_string(nodes_[i]));
    }
    if (!node_index_.count(source_)) throw ValidationError("source node not in node list");
    if (!node_index_.count(terminal_)) throw ValidationError("terminal node not in node list");

    std::vector<char> seen(links_.size(), 0);
    adjacency_.resize(nodes_.size());
    for (const Roadway& rw : links_) {
        if (rw.id < 0 || rw.id >= static_cast<int>(links_.size()) || seen[rw.id])
            throw ValidationError("link IDs must be dense and unique, got " +
                                  std::to_string(rw.id));
        seen[rw.id] = 1;
        auto a = node_index_.find(rw.node_a);
        auto b = node_index_.find(rw.node_b);
        if (a == node_index_.end() || b == node_index_.end())
            throw ValidationError("link " + std::to_string(rw.id) +
                                  " references a node not in the node list");
        if (rw.node_a == rw.node_b)
            throw ValidationError("self-loop on link " + std::to_string(rw.id));
        std::set<int> uniq(rw.bridge_ids.begin(), rw.bridge_ids.end());
        if (uniq.size() != rw.bridge_ids.size())
            throw ValidationError("duplicate bridge ID on link " + std::to_string(rw.id));
        adjacency_[a->second].emplace_back(b->second, rw.id);
        adjacency_[b->second].emplace_back(a->second, rw.id);
    }
}

int TransportNetwork::node_index(int node_id) const {
    auto it = node_index_.find(node_id);
    if (it == node_index_.end())
        throw ValidationError("unknown node ID " + std::to_string(node_id));
    return it->second;
}

std::vector<int> TransportNetwork::bridge_ids() const {
    std::set<int> ids;
    for (const Roadway& rw : links_) ids.insert(rw.bridge_ids.begin(), rw.bridge_ids.end());
    return {ids.begin(), ids.end()};
}

TransportNetwork load_network(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("network file: ") + e.what());
    }
    try {
        std::vector<int> nodes = j.at("nodes").get<std::vector<int>>();
        std::vector<Roadway> links;
        for (const auto& jl : j.at("links")) {
            Roadway rw;
            rw.id = jl.at("id").get<int>();
            auto ep = jl.at("endpoints").get<std::vector<int>>();
            if (ep.size() != 2) throw ParseError("endpoints must have exactly two nodes");
            rw.node_a = ep[0];
            rw.node_b = ep[1];
            rw.bridge_ids = jl.at("bridge_ids").get<std::vector<int>>();
            links.push_back(std::move(rw));
        }
        return TransportNetwork(std::move(nodes), std::move(links),
                                j.at("source").get<int>(), j.at("terminal").get<int>());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("network file: ") + e.what());
    }
}

int is_connected(const TransportNetwork& net, const TopologyRealization& topo) {
    if (topo.states.size() != net.link_count())
        throw ValidationError("realization length " + std::to_string(topo.states.size()) +
                              " does not match link count " + std::to_string(net.link_count()));
    const int src = net.node_index(net.source());
    const int dst = net.node_index(net.terminal());
    std::vector<char> visited(net.node_count(), 0);
    std::vector<int> stack;
    stack.reserve(net.node_count());
    stack.push_back(src);
    visited[src] = 1;
    const auto& adj = net.adjacency();
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        if (u == dst) return 1;
        for (auto [v, link] : adj[u]) {
            if (!visited[v] && topo.states[link]) {
                visited[v] = 1;
                stack.push_back(v);
            }
        }
    }
    return 0;
}

double exact_reliability(const TransportNetwork& net, std::span<const double> probs) {
    const size_t l = net.link_count();
    if (l > 25) throw ValidationError("exact enumeration limited to 25 links");
    if (probs.size() != l) throw ValidationError("probability vector length mismatch");
    for (double p : probs)
        if (!(p >= 0.0 && p <= 1.0))
            throw ValidationError("survival probability outside [0,1]");

    TopologyRealization topo;
    topo.states.assign(l, 0);
    double total = 0.0;
    const uint64_t count = uint64_t{1} << l;
    for (uint64_t mask = 0; mask < count; ++mask) {
        double p = 1.0;
        for (size_t i = 0; i < l; ++i) {
            const bool alive = (mask >> i) & 1;
            topo.states[i] = alive ? 1 : 0;
            p *= alive ? probs[i] : 1.0 - probs[i];
        }
        if (p > 0.0 && is_connected(net, topo)) total += p;
    }
    return total;
}

}  // namespace netrel
