#ifndef NETREL_NETWORK_HPP
#define NETREL_NETWORK_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace netrel {

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Roadway {
    int id = -1;
    int node_a = -1;
    int node_b = -1;
    std::vector<int> bridge_ids;  // empty => invulnerable, survival prob 1

    bool has_bridges() const { return !bridge_ids.empty(); }
};

// One sampled survive/fail assignment for all roadways; states[i] in {0,1}.
struct TopologyRealization {
    std::vector<uint8_t> states;
};

// Undirected transport network with designated source and terminal.
// Immutable after load; safe to share across concurrent workers.
class TransportNetwork {
public:
    TransportNetwork(std::vector<int> nodes, std::vector<Roadway> links,
                     int source, int terminal);

    int source() const { return source_; }
    int terminal() const { return terminal_; }
    size_t link_count() const { return links_.size(); }
    size_t node_count() const { return nodes_.size(); }
    const std::vector<Roadway>& links() const { return links_; }
    const std::vector<int>& nodes() const { return nodes_; }

    // Dense node index in 0..node_count()-1 for a node ID.
    int node_index(int node_id) const;

    // Adjacency as (neighbor index, link id) pairs per dense node index.
    const std::vector<std::vector<std::pair<int, int>>>& adjacency() const {
        return adjacency_;
    }

    // All distinct bridge IDs appearing on any link, ascending.
    std::vector<int> bridge_ids() const;

private:
    std::vector<int> nodes_;
    std::vector<Roadway> links_;
    int source_;
    int terminal_;
    std::unordered_map<int, int> node_index_;
    std::vector<std::vector<std::pair<int, int>>> adjacency_;
};

// Parses the JSON network format:
// {"nodes":[...], "links":[{"id":..,"endpoints":[a,b],"bridge_ids":[...]}...],
//  "source":.., "terminal":..}
TransportNetwork load_network(const std::string& text);

// 1 iff a path of surviving roadways joins source to terminal. Iterative DFS,
// O(|V|+|E|).
int is_connected(const TransportNetwork& net, const TopologyRealization& topo);

// Exact two-terminal reliability by enumerating all 2^l link states.
// Guarded to l <= 25.
double exact_reliability(const TransportNetwork& net, std::span<const double> probs);

}  // namespace netrel

#endif
