#ifndef NETREL_MONTECARLO_HPP
#define NETREL_MONTECARLO_HPP

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "netrel/fragility.hpp"
#include "netrel/hazard.hpp"
#include "netrel/network.hpp"
#include "netrel/rng.hpp"

namespace netrel {

struct ReliabilityEstimate {
    double p_hat = 0.0;
    uint64_t n_samples = 0;
    std::vector<std::pair<uint64_t, double>> trace;  // (sample index, running mean)
    double elapsed_seconds = 0.0;

    double std_err() const;
    std::string to_json() const;
    std::string trace_csv() const;
};

using ConnectivityCheck =
    std::function<int(const TransportNetwork&, const TopologyRealization&)>;

// One Bernoulli draw per link: link i of sample key uses the i-th uniform of
// the sample's substream, so changing one link's probability never perturbs
// the draws of the others.
TopologyRealization sample_topology(std::span<const double> probs, Rng& rng);

// Mean of `check` over n sampled topologies. Deterministic for a fixed seed
// regardless of worker count (per-sample counter-based substreams, chunk
// results reduced in index order).
ReliabilityEstimate estimate_connectivity(const TransportNetwork& net,
                                          std::span<const double> probs, uint64_t n,
                                          const ConnectivityCheck& check, uint64_t seed,
                                          int workers = 1);

// Bridge survival probabilities for one event at magnitude m. When
// residual_rng is non-null, ln Sa at each bridge is perturbed by an
// independent Normal(0, sigma_ln_pga) draw before fragility evaluation.
std::unordered_map<int, double> bridge_survivals_at(
    const std::vector<Bridge>& bridges, const GmpeCoefficients& gmpe,
    const EarthquakeEvent& event, Rng* residual_rng = nullptr);

struct ProbabilisticEventConfig {
    TruncExpMagnitude magnitude_dist;
    uint64_t n_outer = 1;    // event (magnitude) samples
    uint64_t n_inner = 1000; // topologies per event
    bool with_residuals = false;
    double epicenter_lat = 0.0;
    double epicenter_lon = 0.0;
};

// Nested estimator: outer loop over magnitude draws (and optional residual
// draws), inner loop over topology samples; grand mean over
// n_outer * n_inner connectivity indicators.
ReliabilityEstimate estimate_probabilistic_event(
    const TransportNetwork& net, const std::vector<Bridge>& bridges,
    const GmpeCoefficients& gmpe, const ProbabilisticEventConfig& config,
    const ConnectivityCheck& check, uint64_t seed, int workers = 1);

}  // namespace netrel

#endif
