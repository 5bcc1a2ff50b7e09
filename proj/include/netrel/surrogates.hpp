#ifndef NETREL_SURROGATES_HPP
#define NETREL_SURROGATES_HPP

#include <string>
#include <vector>

#include "netrel/montecarlo.hpp"
#include "netrel/neural.hpp"

namespace netrel {

// Replaces the per-realization DFS connectivity check. Input is the binary
// roadway survival vector (all l roadways, bridgeless ones included).
struct ClassifierSurrogate {
    Mlp model;
    double threshold = 0.5;

    int classify(const TopologyRealization& topo) const;
    Eigen::VectorXd scores(const Eigen::MatrixXd& rows) const;
    ConnectivityCheck as_check() const;
};

// Maps the length-l roadway survival-probability vector directly to expected
// two-terminal connectivity.
struct EndToEndSurrogate {
    Mlp model;

    double predict(std::span<const double> probs) const;
    Eigen::VectorXd predict_batch(const Eigen::MatrixXd& rows) const;
};

struct ClassifierMetrics {
    uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

    uint64_t total() const { return tp + tn + fp + fn; }
    double alpha_binary() const;
    double tpr() const;
    double tnr() const;
    std::string to_json() const;
};

struct SplitDataset {
    Dataset train;
    Dataset eval;
};

struct ClassifierDatasetConfig {
    uint64_t n_magnitudes = 10000;
    uint64_t realizations_per_magnitude = 1;
    double train_fraction = 0.9;
    // When set, each disconnected sample also yields one extra row with an
    // additional surviving roadway failed (label stays 0).
    bool augment_failures = false;
    double epicenter_lat = 0.0;
    double epicenter_lon = 0.0;
};

// Rows: sampled topology states (survival encoding), target: DFS indicator.
// Magnitudes follow the training sampler (8.0 - truncated exponential).
SplitDataset generate_classifier_dataset(const TransportNetwork& net,
                                         const std::vector<Bridge>& bridges,
                                         const GmpeCoefficients& gmpe,
                                         const ClassifierDatasetConfig& config, uint64_t seed);

// Default hidden sizes mirror the shipped surrogate architectures.
std::vector<Eigen::Index> default_classifier_hidden();
std::vector<Eigen::Index> default_e2e_hidden();

ClassifierSurrogate train_classifier(const Dataset& data,
                                     const std::vector<Eigen::Index>& hidden_dims,
                                     const TrainConfig& config,
                                     std::vector<double>* loss_history = nullptr);

struct E2eDatasetConfig {
    uint64_t n_magnitudes = 3000;
    uint64_t n_topologies = 100000;
    // Perturb each event's ground motion with the GMPE residual term so the
    // survival-probability inputs scatter around the nominal attenuation
    // curve. Without this the inputs collapse onto a one-dimensional
    // magnitude manifold and the regressor's per-roadway gradients - which
    // sensitivity analysis relies on - are unconstrained by the data.
    bool with_residuals = true;
    double epicenter_lat = 0.0;
    double epicenter_lon = 0.0;
};

// Rows: roadway survival-probability vectors; targets: mean classifier
// verdict over n_topologies sampled topologies. A null classifier labels
// with DFS instead (reference mode, not the accelerated default).
Dataset generate_e2e_dataset(const TransportNetwork& net, const std::vector<Bridge>& bridges,
                             const GmpeCoefficients& gmpe, const ClassifierSurrogate* classifier,
                             const E2eDatasetConfig& config, uint64_t seed);

EndToEndSurrogate train_e2e(const Dataset& data, const std::vector<Eigen::Index>& hidden_dims,
                            const TrainConfig& config, std::vector<double>* loss_history = nullptr);

ClassifierMetrics eval_classifier(const ClassifierSurrogate& surrogate, const Dataset& labeled);

// 1 - |pc_ref - pc_sur| / pc_ref; requires pc_ref > 0.
double qoi_accuracy(double pc_ref, double pc_sur);

enum class SensitivityEstimator { mc_dfs, e2e };

struct SensitivityEntry {
    int bridge_id = -1;
    double improvement_pct = 0.0;
    double estimator_seconds = 0.0;
};

struct SensitivityConfig {
    TruncExpMagnitude magnitude_dist;
    double amplification = 0.10;
    SensitivityEstimator estimator = SensitivityEstimator::mc_dfs;
    const EndToEndSurrogate* e2e = nullptr;  // required for the e2e estimator
    uint64_t n_outer = 200;   // magnitude draws (both estimators)
    uint64_t n_inner = 500;   // topologies per draw (mc_dfs only)
    double epicenter_lat = 0.0;
    double epicenter_lon = 0.0;
};

struct SensitivityReport {
    double baseline = 0.0;
    std::vector<SensitivityEntry> ranking;  // descending improvement, ties by id

    std::string to_csv() const;
};

// One-at-a-time sensitivity: each bridge's survival probability is multiplied
// by (1 + amplification), clamped to 1, with common random numbers across the
// baseline and all variants.
SensitivityReport oat_sensitivity(const TransportNetwork& net, const std::vector<Bridge>& bridges,
                                  const GmpeCoefficients& gmpe, const SensitivityConfig& config,
                                  uint64_t seed);

std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(const std::string& text);

}  // namespace netrel

#endif
