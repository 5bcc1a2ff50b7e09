#include "netrel/surrogates.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace netrel {

namespace {
constexpr uint64_t kTagMagnitude = 0x6d61676eULL;  // "magn"
constexpr uint64_t kTagTopology = 0x746f706fULL;   // matches montecarlo sample keys
constexpr uint64_t kTagSplit = 0x73706c74ULL;      // "splt"
constexpr uint64_t kTagEvent = 0x65766e74ULL;
constexpr uint64_t kTagResidual = 0x72657364ULL;
constexpr uint64_t kTagAugment = 0x6175676dULL;

Eigen::RowVectorXd topo_row(const TopologyRealization& topo) {
    Eigen::RowVectorXd row(topo.states.size());
    for (size_t i = 0; i < topo.states.size(); ++i) row(static_cast<Eigen::Index>(i)) = topo.states[i];
    return row;
}

Dataset take_rows(const Dataset& all, std::span<const Eigen::Index> rows) {
    Dataset out;
    out.inputs.resize(static_cast<Eigen::Index>(rows.size()), all.inputs.cols());
    out.targets.resize(static_cast<Eigen::Index>(rows.size()), all.targets.cols());
    for (size_t r = 0; r < rows.size(); ++r) {
        out.inputs.row(static_cast<Eigen::Index>(r)) = all.inputs.row(rows[r]);
        out.targets.row(static_cast<Eigen::Index>(r)) = all.targets.row(rows[r]);
    }
    return out;
}
}  // namespace

int ClassifierSurrogate::classify(const TopologyRealization& topo) const {
    if (static_cast<Eigen::Index>(topo.states.size()) != model.input_dim())
        throw ValidationError("realization length does not match classifier input dim");
    const double score = model.forward(topo_row(topo))(0);
    return score >= threshold ? 1 : 0;
}

Eigen::VectorXd ClassifierSurrogate::scores(const Eigen::MatrixXd& rows) const {
    return model.forward_batch(rows).col(0);
}

ConnectivityCheck ClassifierSurrogate::as_check() const {
    return [this](const TransportNetwork&, const TopologyRealization& topo) {
        return classify(topo);
    };
}

double EndToEndSurrogate::predict(std::span<const double> probs) const {
    if (static_cast<Eigen::Index>(probs.size()) != model.input_dim())
        throw ValidationError("probability vector length does not match surrogate input dim");
    Eigen::RowVectorXd row =
        Eigen::Map<const Eigen::RowVectorXd>(probs.data(), static_cast<Eigen::Index>(probs.size()));
    const double y = model.forward(row)(0);
    return std::clamp(y, 0.0, 1.0);
}

Eigen::VectorXd EndToEndSurrogate::predict_batch(const Eigen::MatrixXd& rows) const {
    return model.forward_batch(rows).col(0).cwiseMax(0.0).cwiseMin(1.0);
}

double ClassifierMetrics::alpha_binary() const {
    return total() == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(total());
}

double ClassifierMetrics::tpr() const {
    return tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double ClassifierMetrics::tnr() const {
    return tn + fp == 0 ? 1.0 : static_cast<double>(tn) / static_cast<double>(tn + fp);
}

std::string ClassifierMetrics::to_json() const {
    nlohmann::json j;
    j["tp"] = tp;
    j["tn"] = tn;
    j["fp"] = fp;
    j["fn"] = fn;
    j["alpha_binary"] = alpha_binary();
    j["tpr"] = tpr();
    j["tnr"] = tnr();
    return j.dump(2) + "\n";
}

SplitDataset generate_classifier_dataset(const TransportNetwork& net,
                                         const std::vector<Bridge>& bridges,
                                         const GmpeCoefficients& gmpe,
                                         const ClassifierDatasetConfig& config, uint64_t seed) {
    if (config.n_magnitudes < 1 || config.realizations_per_magnitude < 1)
        throw ValidationError("dataset counts must be at least 1");
    const Eigen::Index l = static_cast<Eigen::Index>(net.link_count());

    std::vector<Eigen::RowVectorXd> rows;
    std::vector<double> labels;
    for (uint64_t i = 0; i < config.n_magnitudes; ++i) {
        Rng mag_rng(Rng::derive_key({seed, kTagMagnitude, i}));
        EarthquakeEvent event;
        event.magnitude = sample_training_magnitude(mag_rng);
        event.epicenter_lat = config.epicenter_lat;
        event.epicenter_lon = config.epicenter_lon;
        const auto survivals = bridge_survivals_at(bridges, gmpe, event);
        const std::vector<double> probs = roadway_survival_probs(net, survivals);

        for (uint64_t r = 0; r < config.realizations_per_magnitude; ++r) {
            Rng rng(Rng::derive_key({seed, kTagTopology, i, r}));
            TopologyRealization topo = sample_topology(probs, rng);
            const int label = is_connected(net, topo);
            rows.push_back(topo_row(topo));
            labels.push_back(label);

            if (config.augment_failures && label == 0) {
                std::vector<size_t> alive;
                for (size_t k = 0; k < topo.states.size(); ++k)
                    if (topo.states[k]) alive.push_back(k);
                if (!alive.empty()) {
                    Rng aug(Rng::derive_key({seed, kTagAugment, i, r}));
                    TopologyRealization extra = topo;
                    extra.states[alive[aug.next_u64() % alive.size()]] = 0;
                    rows.push_back(topo_row(extra));
                    labels.push_back(0.0);  // failing more roadways cannot reconnect
                }
            }
        }
    }

    Dataset all;
    all.inputs.resize(static_cast<Eigen::Index>(rows.size()), l);
    all.targets.resize(static_cast<Eigen::Index>(rows.size()), 1);
    for (size_t r = 0; r < rows.size(); ++r) {
        all.inputs.row(static_cast<Eigen::Index>(r)) = rows[r];
        all.targets(static_cast<Eigen::Index>(r), 0) = labels[r];
    }

    std::vector<Eigen::Index> order(rows.size());
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng split_rng(Rng::derive_key({seed, kTagSplit}));
    split_rng.shuffle(std::span<Eigen::Index>(order));
    const size_t n_train =
        static_cast<size_t>(std::llround(config.train_fraction * static_cast<double>(order.size())));

    SplitDataset split;
    split.train = take_rows(all, std::span<const Eigen::Index>(order.data(), n_train));
    split.eval = take_rows(
        all, std::span<const Eigen::Index>(order.data() + n_train, order.size() - n_train));
    return split;
}

std::vector<Eigen::Index> default_classifier_hidden() { return {64, 64, 32, 32, 16, 16, 8}; }
std::vector<Eigen::Index> default_e2e_hidden() { return {64, 32, 32, 16, 8}; }

ClassifierSurrogate train_classifier(const Dataset& data,
                                     const std::vector<Eigen::Index>& hidden_dims,
                                     const TrainConfig& config,
                                     std::vector<double>* loss_history) {
    std::vector<Eigen::Index> dims;
    dims.push_back(data.inputs.cols());
    dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
    dims.push_back(1);
    // RELU hidden stack with a sigmoid on the final hidden layer and output.
    std::vector<Activation> acts(dims.size() - 1, Activation::relu);
    if (acts.size() >= 2) acts[acts.size() - 2] = Activation::sigmoid;
    acts.back() = Activation::sigmoid;

    ClassifierSurrogate surrogate;
    surrogate.model = Mlp::random(dims, acts, config.shuffle_seed);
    TrainConfig c = config;
    c.loss = LossKind::bce;
    auto history = train(surrogate.model, data, c);
    if (loss_history) *loss_history = std::move(history);
    return surrogate;
}

Dataset generate_e2e_dataset(const TransportNetwork& net, const std::vector<Bridge>& bridges,
                             const GmpeCoefficients& gmpe, const ClassifierSurrogate* classifier,
                             const E2eDatasetConfig& config, uint64_t seed) {
    if (config.n_magnitudes < 1 || config.n_topologies < 1)
        throw ValidationError("dataset counts must be at least 1");
    const Eigen::Index l = static_cast<Eigen::Index>(net.link_count());
    if (classifier != nullptr && classifier->model.input_dim() != l)
        throw ValidationError("classifier input dim does not match network");

    Dataset data;
    data.inputs.resize(static_cast<Eigen::Index>(config.n_magnitudes), l);
    data.targets.resize(static_cast<Eigen::Index>(config.n_magnitudes), 1);
    Eigen::MatrixXd batch(static_cast<Eigen::Index>(config.n_topologies), l);
    for (uint64_t i = 0; i < config.n_magnitudes; ++i) {
        Rng mag_rng(Rng::derive_key({seed, kTagMagnitude, i}));
        EarthquakeEvent event;
        event.magnitude = sample_training_magnitude(mag_rng);
        event.epicenter_lat = config.epicenter_lat;
        event.epicenter_lon = config.epicenter_lon;
        // Alternate nominal and residual-perturbed events: the nominal half
        // keeps the fit sharp on the attenuation manifold where predictions
        // are queried, the scattered half pins down per-roadway gradients.
        Rng residual_rng(Rng::derive_key({seed, kTagResidual, i}));
        const bool perturb = config.with_residuals && (i % 2 == 1);
        const auto survivals =
            bridge_survivals_at(bridges, gmpe, event, perturb ? &residual_rng : nullptr);
        const std::vector<double> probs = roadway_survival_probs(net, survivals);

        double label;
        if (classifier != nullptr) {
            for (uint64_t t = 0; t < config.n_topologies; ++t) {
                Rng rng(Rng::derive_key({seed, kTagTopology, i, t}));
                const TopologyRealization topo = sample_topology(probs, rng);
                batch.row(static_cast<Eigen::Index>(t)) = topo_row(topo);
            }
            const Eigen::VectorXd s = classifier->scores(batch);
            label = (s.array() >= classifier->threshold).cast<double>().mean();
        } else {
            uint64_t successes = 0;
            for (uint64_t t = 0; t < config.n_topologies; ++t) {
                Rng rng(Rng::derive_key({seed, kTagTopology, i, t}));
                const TopologyRealization topo = sample_topology(probs, rng);
                successes += static_cast<uint64_t>(is_connected(net, topo));
            }
            label = static_cast<double>(successes) / static_cast<double>(config.n_topologies);
        }

        data.inputs.row(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const Eigen::RowVectorXd>(probs.data(), l);
        data.targets(static_cast<Eigen::Index>(i), 0) = label;
    }
    return data;
}

EndToEndSurrogate train_e2e(const Dataset& data, const std::vector<Eigen::Index>& hidden_dims,
                            const TrainConfig& config, std::vector<double>* loss_history) {
    std::vector<Eigen::Index> dims;
    dims.push_back(data.inputs.cols());
    dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
    dims.push_back(1);
    std::vector<Activation> acts(dims.size() - 1, Activation::sigmoid);
    acts.back() = Activation::identity;

    EndToEndSurrogate surrogate;
    surrogate.model = Mlp::random(dims, acts, config.shuffle_seed);
    TrainConfig c = config;
    c.loss = LossKind::mse;
    auto history = train(surrogate.model, data, c);
    if (loss_history) *loss_history = std::move(history);
    return surrogate;
}

ClassifierMetrics eval_classifier(const ClassifierSurrogate& surrogate, const Dataset& labeled) {
    if (labeled.inputs.rows() == 0) throw ValidationError("empty evaluation dataset");
    const Eigen::VectorXd s = surrogate.scores(labeled.inputs);
    ClassifierMetrics m;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        const bool pred = s(i) >= surrogate.threshold;
        const double y = labeled.targets(i, 0);
        if (y != 0.0 && y != 1.0) throw ValidationError("labels must be 0 or 1");
        if (y == 1.0)
            pred ? ++m.tp : ++m.fn;
        else
            pred ? ++m.fp : ++m.tn;
    }
    return m;
}

double qoi_accuracy(double pc_ref, double pc_sur) {
    if (!(pc_ref > 0)) throw ValidationError("reference connectivity must be positive");
    return 1.0 - std::abs(pc_ref - pc_sur) / pc_ref;
}

std::string SensitivityReport::to_csv() const {
    std::ostringstream out;
    out << "rank,bridge_id,improvement_pct,estimator_seconds\n";
    out.precision(17);
    for (size_t i = 0; i < ranking.size(); ++i)
        out << i + 1 << "," << ranking[i].bridge_id << "," << ranking[i].improvement_pct << ","
            << ranking[i].estimator_seconds << "\n";
    return out.str();
}

namespace {

// Per-event scenario data shared by the baseline and every OAT variant.
struct EventScenario {
    std::unordered_map<int, double> survivals;
};

double mc_connectivity(const TransportNetwork& net, const std::vector<EventScenario>& events,
                       uint64_t n_inner, uint64_t seed, int amplified_bridge,
                       double amplification) {
    uint64_t successes = 0;
    std::vector<double> probs;
    for (size_t e = 0; e < events.size(); ++e) {
        auto survivals = events[e].survivals;
        if (amplified_bridge >= 0)
            survivals[amplified_bridge] =
                std::min(1.0, survivals[amplified_bridge] * (1.0 + amplification));
        probs = roadway_survival_probs(net, survivals);
        for (uint64_t t = 0; t < n_inner; ++t) {
            Rng rng(Rng::derive_key({seed, kTagTopology, static_cast<uint64_t>(e), t}));
            const TopologyRealization topo = sample_topology(probs, rng);
            successes += static_cast<uint64_t>(is_connected(net, topo));
        }
    }
    return static_cast<double>(successes) /
           static_cast<double>(events.size() * n_inner);
}

double e2e_connectivity(const TransportNetwork& net, const std::vector<EventScenario>& events,
                        const EndToEndSurrogate& surrogate, int amplified_bridge,
                        double amplification) {
    double sum = 0.0;
    for (const EventScenario& ev : events) {
        auto survivals = ev.survivals;
        if (amplified_bridge >= 0)
            survivals[amplified_bridge] =
                std::min(1.0, survivals[amplified_bridge] * (1.0 + amplification));
        const std::vector<double> probs = roadway_survival_probs(net, survivals);
        sum += surrogate.predict(probs);
    }
    return sum / static_cast<double>(events.size());
}

}  // namespace

SensitivityReport oat_sensitivity(const TransportNetwork& net, const std::vector<Bridge>& bridges,
                                  const GmpeCoefficients& gmpe, const SensitivityConfig& config,
                                  uint64_t seed) {
    if (!(config.amplification > 0)) throw ValidationError("amplification must be positive");
    if (config.estimator == SensitivityEstimator::e2e && config.e2e == nullptr)
        throw ValidationError("e2e estimator requires a trained surrogate");

    // Draw the event scenarios once; all variants reuse them (common random
    // numbers), so an irrelevant bridge yields an exactly-zero improvement.
    std::vector<EventScenario> events(config.n_outer);
    for (uint64_t e = 0; e < config.n_outer; ++e) {
        Rng event_rng(Rng::derive_key({seed, kTagEvent, e}));
        EarthquakeEvent event;
        event.magnitude = sample_magnitude_truncexp(config.magnitude_dist, event_rng);
        event.epicenter_lat = config.epicenter_lat;
        event.epicenter_lon = config.epicenter_lon;
        events[e].survivals = bridge_survivals_at(bridges, gmpe, event);
    }

    auto evaluate = [&](int amplified_bridge) {
        if (config.estimator == SensitivityEstimator::mc_dfs)
            return mc_connectivity(net, events, config.n_inner, seed, amplified_bridge,
                                   config.amplification);
        return e2e_connectivity(net, events, *config.e2e, amplified_bridge, config.amplification);
    };

    SensitivityReport report;
    report.baseline = evaluate(-1);
    if (!(report.baseline > 0))
        throw ValidationError("baseline connectivity is zero; improvements undefined");

    for (const Bridge& b : bridges) {
        const auto start = std::chrono::steady_clock::now();
        const double amplified = evaluate(b.id);
        SensitivityEntry entry;
        entry.bridge_id = b.id;
        entry.improvement_pct = 100.0 * (amplified - report.baseline) / report.baseline;
        entry.estimator_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        report.ranking.push_back(entry);
    }
    std::sort(report.ranking.begin(), report.ranking.end(),
              [](const SensitivityEntry& a, const SensitivityEntry& b) {
                  if (a.improvement_pct != b.improvement_pct)
                      return a.improvement_pct > b.improvement_pct;
                  return a.bridge_id < b.bridge_id;
              });
    return report;
}

std::string dataset_to_csv(const Dataset& data) {
    std::ostringstream out;
    for (Eigen::Index c = 0; c < data.inputs.cols(); ++c) out << "x" << c << ",";
    out << "y\n";
    out.precision(17);
    for (Eigen::Index r = 0; r < data.inputs.rows(); ++r) {
        for (Eigen::Index c = 0; c < data.inputs.cols(); ++c) out << data.inputs(r, c) << ",";
        out << data.targets(r, 0) << "\n";
    }
    return out.str();
}

Dataset dataset_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("dataset: empty file");
    const Eigen::Index cols =
        static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',')) + 1;
    if (cols < 2) throw ParseError("dataset: need at least one feature and one target column");
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::vector<double> vals;
        std::string cell;
        while (std::getline(row, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError("dataset: bad number '" + cell + "'");
            }
        }
        if (static_cast<Eigen::Index>(vals.size()) != cols)
            throw ParseError("dataset: inconsistent column count");
        rows.push_back(std::move(vals));
    }
    Dataset data;
    data.inputs.resize(static_cast<Eigen::Index>(rows.size()), cols - 1);
    data.targets.resize(static_cast<Eigen::Index>(rows.size()), 1);
    for (size_t r = 0; r < rows.size(); ++r) {
        for (Eigen::Index c = 0; c < cols - 1; ++c)
            data.inputs(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<size_t>(c)];
        data.targets(static_cast<Eigen::Index>(r), 0) = rows[r].back();
    }
    return data;
}

}  // namespace netrel
