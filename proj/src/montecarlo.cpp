#include "netrel/montecarlo.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace netrel {

namespace {

// Stream tags keep event, residual, and topology substreams disjoint.
constexpr uint64_t kTagTopology = 0x746f706fULL;  // "topo"
constexpr uint64_t kTagEvent = 0x65766e74ULL;     // "evnt"
constexpr uint64_t kTagResidual = 0x72657364ULL;  // "resd"

std::vector<std::pair<uint64_t, double>> build_trace(const std::vector<uint8_t>& bits) {
    std::vector<uint64_t> checkpoints;
    for (uint64_t base = 1; base <= bits.size(); base *= 10)
        for (uint64_t m : {uint64_t{1}, uint64_t{2}, uint64_t{5}}) {
            const uint64_t c = base * m;
            if (c <= bits.size()) checkpoints.push_back(c);
        }
    if (checkpoints.empty() || checkpoints.back() != bits.size())
        checkpoints.push_back(bits.size());

    std::vector<std::pair<uint64_t, double>> trace;
    trace.reserve(checkpoints.size());
    uint64_t successes = 0;
    size_t next = 0;
    for (uint64_t i = 0; i < bits.size(); ++i) {
        successes += bits[i];
        if (next < checkpoints.size() && i + 1 == checkpoints[next]) {
            trace.emplace_back(i + 1, static_cast<double>(successes) / static_cast<double>(i + 1));
            ++next;
        }
    }
    return trace;
}

ReliabilityEstimate finalize(std::vector<uint8_t> bits, double elapsed) {
    ReliabilityEstimate est;
    est.n_samples = bits.size();
    est.trace = build_trace(bits);
    est.p_hat = est.trace.back().second;
    est.elapsed_seconds = elapsed;
    return est;
}

void run_chunked(uint64_t n, int workers,
                 const std::function<void(uint64_t, uint64_t)>& body) {
    if (workers <= 1) {
        body(0, n);
        return;
    }
    constexpr uint64_t kChunk = 4096;
    std::atomic<uint64_t> next{0};
    auto worker = [&] {
        for (;;) {
            const uint64_t begin = next.fetch_add(kChunk);
            if (begin >= n) break;
            body(begin, std::min(begin + kChunk, n));
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

}  // namespace

double ReliabilityEstimate::std_err() const {
    if (n_samples == 0) return 0.0;
    return std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(n_samples));
}

std::string ReliabilityEstimate::to_json() const {
    nlohmann::json j;
    j["p_hat"] = p_hat;
    j["n_samples"] = n_samples;
    j["std_err"] = std_err();
    return j.dump(2) + "\n";
}

std::string ReliabilityEstimate::trace_csv() const {
    std::ostringstream out;
    out << "sample_index,running_mean\n";
    out.precision(17);
    for (const auto& [idx, mean] : trace) out << idx << "," << mean << "\n";
    return out.str();
}

TopologyRealization sample_topology(std::span<const double> probs, Rng& rng) {
    TopologyRealization topo;
    topo.states.resize(probs.size());
    for (size_t i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        if (!(p >= 0.0 && p <= 1.0))
            throw ValidationError("survival probability outside [0,1]");
        topo.states[i] = rng.uniform() < p ? 1 : 0;
    }
    return topo;
}

ReliabilityEstimate estimate_connectivity(const TransportNetwork& net,
                                          std::span<const double> probs, uint64_t n,
                                          const ConnectivityCheck& check, uint64_t seed,
                                          int workers) {
    if (n < 1) throw ValidationError("sample count must be at least 1");
    if (probs.size() != net.link_count())
        throw ValidationError("probability vector length mismatch");
    for (double p : probs)
        if (!(p >= 0.0 && p <= 1.0))
            throw ValidationError("survival probability outside [0,1]");

    const auto start = std::chrono::steady_clock::now();
    std::vector<uint8_t> bits(n, 0);
    run_chunked(n, workers, [&](uint64_t begin, uint64_t end) {
        for (uint64_t j = begin; j < end; ++j) {
            Rng rng(Rng::derive_key({seed, kTagTopology, 0, j}));
            const TopologyRealization topo = sample_topology(probs, rng);
            bits[j] = static_cast<uint8_t>(check(net, topo));
        }
    });
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return finalize(std::move(bits), elapsed);
}

std::unordered_map<int, double> bridge_survivals_at(const std::vector<Bridge>& bridges,
                                                    const GmpeCoefficients& gmpe,
                                                    const EarthquakeEvent& event,
                                                    Rng* residual_rng) {
    std::unordered_map<int, double> survivals;
    survivals.reserve(bridges.size());
    for (const Bridge& b : bridges) {
        const double r = source_distance(b.site, event);
        // One residual draw per bridge; it perturbs ln(PGA) and carries into
        // Sa through the spectral-shape product.
        double scale = 1.0;
        if (residual_rng != nullptr && gmpe.sigma_ln_pga > 0.0)
            scale = std::exp(gmpe.sigma_ln_pga * residual_rng->normal());
        IntensityMeasures ims;
        ims.pga = median_pga(gmpe, event.magnitude, r, b.site) * scale;
        ims.sa_0_3 = spectral_accel(gmpe, event.magnitude, r, b.site, 0.3) * scale;
        ims.sa_1_0 = spectral_accel(gmpe, event.magnitude, r, b.site, 1.0) * scale;
        survivals[b.id] = bridge_survival_prob(b, ims);
    }
    return survivals;
}

ReliabilityEstimate estimate_probabilistic_event(
    const TransportNetwork& net, const std::vector<Bridge>& bridges,
    const GmpeCoefficients& gmpe, const ProbabilisticEventConfig& config,
    const ConnectivityCheck& check, uint64_t seed, int workers) {
    if (config.n_outer < 1 || config.n_inner < 1)
        throw ValidationError("sample counts must be at least 1");

    const auto start = std::chrono::steady_clock::now();
    const uint64_t total = config.n_outer * config.n_inner;
    std::vector<uint8_t> bits(total, 0);
    run_chunked(config.n_outer, workers, [&](uint64_t begin, uint64_t end) {
        for (uint64_t e = begin; e < end; ++e) {
            Rng event_rng(Rng::derive_key({seed, kTagEvent, e}));
            EarthquakeEvent event;
            event.magnitude = sample_magnitude_truncexp(config.magnitude_dist, event_rng);
            event.epicenter_lat = config.epicenter_lat;
            event.epicenter_lon = config.epicenter_lon;

            Rng residual_rng(Rng::derive_key({seed, kTagResidual, e}));
            const auto survivals = bridge_survivals_at(
                bridges, gmpe, event, config.with_residuals ? &residual_rng : nullptr);
            const std::vector<double> probs = roadway_survival_probs(net, survivals);

            for (uint64_t t = 0; t < config.n_inner; ++t) {
                Rng rng(Rng::derive_key({seed, kTagTopology, e, t}));
                const TopologyRealization topo = sample_topology(probs, rng);
                bits[e * config.n_inner + t] = static_cast<uint8_t>(check(net, topo));
            }
        }
    });
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return finalize(std::move(bits), elapsed);
}

}  // namespace netrel
