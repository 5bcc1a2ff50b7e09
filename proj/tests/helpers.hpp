#ifndef NETREL_TEST_HELPERS_HPP
#define NETREL_TEST_HELPERS_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "netrel/network.hpp"
#include "netrel/rng.hpp"

namespace netrel::testing {

inline std::string data_path(const std::string& name) {
    return std::string(NETREL_DATA_DIR) + "/" + name;
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// Classic 5-link bridge graph: s=0, a=1, b=2, t=3.
// links: 0:s-a 1:s-b 2:a-b 3:a-t 4:b-t
inline TransportNetwork wheatstone() {
    std::vector<Roadway> links = {
        {0, 0, 1, {}}, {1, 0, 2, {}}, {2, 1, 2, {}}, {3, 1, 3, {}}, {4, 2, 3, {}}};
    return TransportNetwork({0, 1, 2, 3}, std::move(links), 0, 3);
}

// Independent connectivity oracle: union-find over surviving links.
inline int connected_union_find(const TransportNetwork& net, const TopologyRealization& topo) {
    std::vector<int> parent(net.node_count());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const Roadway& rw : net.links())
        if (topo.states[rw.id]) {
            int a = find(net.node_index(rw.node_a));
            int b = find(net.node_index(rw.node_b));
            parent[a] = b;
        }
    return find(net.node_index(net.source())) == find(net.node_index(net.terminal())) ? 1 : 0;
}

// Exact reliability by enumeration with the union-find oracle; fully
// independent of the library's DFS path.
inline double exact_reliability_oracle(const TransportNetwork& net,
                                       const std::vector<double>& probs) {
    const size_t l = net.link_count();
    TopologyRealization topo;
    topo.states.assign(l, 0);
    double total = 0.0;
    for (uint64_t mask = 0; mask < (uint64_t{1} << l); ++mask) {
        double p = 1.0;
        for (size_t i = 0; i < l; ++i) {
            const bool alive = (mask >> i) & 1;
            topo.states[i] = alive;
            p *= alive ? probs[i] : 1.0 - probs[i];
        }
        if (connected_union_find(net, topo)) total += p;
    }
    return total;
}

// Random connected-ish undirected network with <= max_nodes nodes,
// no self-loops, dense link IDs.
inline TransportNetwork random_network(Rng& rng, int max_nodes = 10, int max_extra_links = 6) {
    const int n = 3 + static_cast<int>(rng.next_u64() % static_cast<uint64_t>(max_nodes - 2));
    std::vector<Roadway> links;
    // Spanning-tree skeleton keeps source/terminal usually reachable.
    for (int v = 1; v < n; ++v) {
        const int u = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(v));
        links.push_back({static_cast<int>(links.size()), u, v, {}});
    }
    const int extra = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(max_extra_links + 1));
    for (int e = 0; e < extra; ++e) {
        const int u = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(n));
        int v = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(n));
        if (u == v) v = (v + 1) % n;
        links.push_back({static_cast<int>(links.size()), u, v, {}});
    }
    std::vector<int> nodes(n);
    std::iota(nodes.begin(), nodes.end(), 0);
    return TransportNetwork(std::move(nodes), std::move(links), 0, n - 1);
}

inline TopologyRealization random_topology(Rng& rng, size_t l, double p_alive = 0.5) {
    TopologyRealization topo;
    topo.states.resize(l);
    for (size_t i = 0; i < l; ++i) topo.states[i] = rng.uniform() < p_alive ? 1 : 0;
    return topo;
}

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        const double fa = static_cast<double>(i) / a.size();
        const double fb = static_cast<double>(j) / b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

}  // namespace netrel::testing

#endif
