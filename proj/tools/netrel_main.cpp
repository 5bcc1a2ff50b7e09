#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "netrel/fragility.hpp"
#include "netrel/hazard.hpp"
#include "netrel/montecarlo.hpp"
#include "netrel/network.hpp"
#include "netrel/neural.hpp"
#include "netrel/surrogates.hpp"

namespace {

using namespace netrel;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void spill(const std::string& path, const std::string& text) {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << text;
}

// Shared input-file options and the loaded artifacts they resolve to.
struct RunConfig {
    std::string network_path = "data/network.json";
    std::string bridges_path = "data/bridges.json";
    std::string fragility_path = "data/fragility.csv";
    std::string gmpe_path = "data/gmpe.json";
    std::string out_dir = "out";
    uint64_t seed = 1;
    int workers = 1;
    double epicenter_lat = 37.04;
    double epicenter_lon = -121.88;

    void add_options(CLI::App& cmd) {
        cmd.add_option("--network", network_path, "network JSON file");
        cmd.add_option("--bridges", bridges_path, "bridge inventory JSON file");
        cmd.add_option("--fragility", fragility_path, "fragility curve CSV file");
        cmd.add_option("--gmpe", gmpe_path, "GMPE coefficient JSON file");
        cmd.add_option("--out", out_dir, "output directory");
        cmd.add_option("--seed", seed, "random seed");
        cmd.add_option("--workers", workers, "worker thread count")->check(CLI::PositiveNumber);
        cmd.add_option("--epicenter-lat", epicenter_lat, "epicenter latitude");
        cmd.add_option("--epicenter-lon", epicenter_lon, "epicenter longitude");
    }

    TransportNetwork load_net() const { return load_network(slurp(network_path)); }
    std::vector<Bridge> load_inventory() const {
        return load_bridges(slurp(bridges_path), load_fragility_table(slurp(fragility_path)));
    }
    GmpeCoefficients load_coeffs() const { return load_gmpe(slurp(gmpe_path)); }
};

int default_workers() {
    if (const char* env = std::getenv("NETREL_WORKERS")) {
        const int w = std::atoi(env);
        if (w >= 1) return w;
    }
    return 1;
}

ConnectivityCheck make_checker(const std::string& spec, std::unique_ptr<ClassifierSurrogate>& holder) {
    if (spec == "dfs")
        return [](const TransportNetwork& net, const TopologyRealization& topo) {
            return is_connected(net, topo);
        };
    const std::string prefix = "classifier:";
    if (spec.rfind(prefix, 0) == 0) {
        holder = std::make_unique<ClassifierSurrogate>();
        holder->model = load_model(slurp(spec.substr(prefix.size())));
        ClassifierSurrogate* raw = holder.get();
        return [raw](const TransportNetwork&, const TopologyRealization& topo) {
            return raw->classify(topo);
        };
    }
    throw CLI::ValidationError("--checker", "expected 'dfs' or 'classifier:<model-file>'");
}

void write_timing(const std::string& out_dir, double seconds) {
    nlohmann::json j;
    j["elapsed_seconds"] = seconds;
    spill(out_dir + "/timing.json", j.dump(2) + "\n");
}

int cmd_simulate(const RunConfig& rc, double magnitude, const std::string& mag_dist_path,
                 uint64_t samples, uint64_t events, bool residuals, const std::string& checker) {
    const TransportNetwork net = rc.load_net();
    const auto bridges = rc.load_inventory();
    const GmpeCoefficients gmpe = rc.load_coeffs();
    std::unique_ptr<ClassifierSurrogate> classifier;
    const ConnectivityCheck check = make_checker(checker, classifier);

    ReliabilityEstimate est;
    if (!mag_dist_path.empty()) {
        ProbabilisticEventConfig cfg;
        cfg.magnitude_dist = load_magnitude_dist(slurp(mag_dist_path));
        cfg.n_outer = events;
        cfg.n_inner = samples;
        cfg.with_residuals = residuals;
        cfg.epicenter_lat = rc.epicenter_lat;
        cfg.epicenter_lon = rc.epicenter_lon;
        est = estimate_probabilistic_event(net, bridges, gmpe, cfg, check, rc.seed, rc.workers);
    } else {
        EarthquakeEvent event{magnitude, rc.epicenter_lat, rc.epicenter_lon};
        Rng residual_rng(Rng::derive_key({rc.seed, 0x72657364ULL, 0}));
        const auto survivals =
            bridge_survivals_at(bridges, gmpe, event, residuals ? &residual_rng : nullptr);
        const std::vector<double> probs = roadway_survival_probs(net, survivals);
        est = estimate_connectivity(net, probs, samples, check, rc.seed, rc.workers);
    }
    spill(rc.out_dir + "/estimate.json", est.to_json());
    spill(rc.out_dir + "/trace.csv", est.trace_csv());
    write_timing(rc.out_dir, est.elapsed_seconds);
    std::cout << "p_hat " << est.p_hat << " (n=" << est.n_samples << ")\n";
    return kExitOk;
}

std::string history_csv(const std::vector<double>& history) {
    std::ostringstream out;
    out << "epoch,loss\n";
    out.precision(17);
    for (size_t i = 0; i < history.size(); ++i) out << i + 1 << "," << history[i] << "\n";
    return out.str();
}

int cmd_train(const RunConfig& rc, const std::string& kind, uint64_t samples,
              uint64_t realizations, uint64_t magnitudes, uint64_t topologies, int epochs,
              int batch_size, double lr, const std::string& classifier_path,
              const std::string& label_with, bool augment) {
    const TransportNetwork net = rc.load_net();
    const auto bridges = rc.load_inventory();
    const GmpeCoefficients gmpe = rc.load_coeffs();

    TrainConfig tc;
    tc.epochs = epochs;
    tc.batch_size = batch_size;
    tc.learning_rate = lr;
    tc.shuffle_seed = rc.seed;
    const auto start = std::chrono::steady_clock::now();

    if (kind == "classifier") {
        ClassifierDatasetConfig dc;
        dc.n_magnitudes = samples;
        dc.realizations_per_magnitude = realizations;
        dc.augment_failures = augment;
        dc.epicenter_lat = rc.epicenter_lat;
        dc.epicenter_lon = rc.epicenter_lon;
        const SplitDataset split = generate_classifier_dataset(net, bridges, gmpe, dc, rc.seed);
        std::vector<double> history;
        const ClassifierSurrogate surrogate =
            train_classifier(split.train, default_classifier_hidden(), tc, &history);
        spill(rc.out_dir + "/model.json", save_model(surrogate.model));
        spill(rc.out_dir + "/loss_history.csv", history_csv(history));
        spill(rc.out_dir + "/metrics.json", eval_classifier(surrogate, split.eval).to_json());
    } else if (kind == "e2e") {
        std::unique_ptr<ClassifierSurrogate> classifier;
        if (label_with == "classifier") {
            if (classifier_path.empty())
                throw CLI::ValidationError("--classifier", "required when labeling with classifier");
            classifier = std::make_unique<ClassifierSurrogate>();
            classifier->model = load_model(slurp(classifier_path));
        } else if (label_with != "dfs") {
            throw CLI::ValidationError("--label-with", "expected 'classifier' or 'dfs'");
        }
        E2eDatasetConfig dc;
        dc.n_magnitudes = magnitudes;
        dc.n_topologies = topologies;
        dc.epicenter_lat = rc.epicenter_lat;
        dc.epicenter_lon = rc.epicenter_lon;
        const Dataset data = generate_e2e_dataset(net, bridges, gmpe, classifier.get(), dc, rc.seed);
        // 90/10 row split for held-out metrics.
        const Eigen::Index n_eval = std::max<Eigen::Index>(1, data.inputs.rows() / 10);
        const Eigen::Index n_train = data.inputs.rows() - n_eval;
        Dataset train_set{data.inputs.topRows(n_train), data.targets.topRows(n_train)};
        Dataset eval_set{data.inputs.bottomRows(n_eval), data.targets.bottomRows(n_eval)};
        std::vector<double> history;
        const EndToEndSurrogate surrogate = train_e2e(train_set, default_e2e_hidden(), tc, &history);
        spill(rc.out_dir + "/model.json", save_model(surrogate.model));
        spill(rc.out_dir + "/loss_history.csv", history_csv(history));
        nlohmann::json jm;
        jm["alpha_qoi"] = qoi_accuracy(eval_set.targets.mean(),
                                       surrogate.predict_batch(eval_set.inputs).mean());
        jm["eval_mse"] = loss_mse(surrogate.predict_batch(eval_set.inputs), eval_set.targets);
        spill(rc.out_dir + "/metrics.json", jm.dump(2) + "\n");
    } else {
        throw CLI::ValidationError("--kind", "expected 'classifier' or 'e2e'");
    }
    write_timing(rc.out_dir,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    return kExitOk;
}

int cmd_predict(const RunConfig& rc, const std::string& model_path, double magnitude,
                const std::string& mag_dist_path, uint64_t n_events) {
    const TransportNetwork net = rc.load_net();
    const auto bridges = rc.load_inventory();
    const GmpeCoefficients gmpe = rc.load_coeffs();
    EndToEndSurrogate surrogate;
    surrogate.model = load_model(slurp(model_path));
    if (surrogate.model.input_dim() != static_cast<Eigen::Index>(net.link_count()))
        throw ValidationError("model expects " + std::to_string(surrogate.model.input_dim()) +
                              " roadways but network has " + std::to_string(net.link_count()));

    std::vector<double> mags;
    if (!mag_dist_path.empty()) {
        const TruncExpMagnitude dist = load_magnitude_dist(slurp(mag_dist_path));
        for (uint64_t e = 0; e < n_events; ++e) {
            Rng rng(Rng::derive_key({rc.seed, 0x65766e74ULL, e}));
            mags.push_back(sample_magnitude_truncexp(dist, rng));
        }
    } else {
        mags.push_back(magnitude);
    }

    const auto start = std::chrono::steady_clock::now();
    std::ostringstream csv;
    csv << "event_index,magnitude,predicted_connectivity\n";
    csv.precision(17);
    double sum = 0.0;
    for (size_t e = 0; e < mags.size(); ++e) {
        EarthquakeEvent event{mags[e], rc.epicenter_lat, rc.epicenter_lon};
        const auto survivals = bridge_survivals_at(bridges, gmpe, event);
        const std::vector<double> probs = roadway_survival_probs(net, survivals);
        const double pred = surrogate.predict(probs);
        sum += pred;
        csv << e << "," << mags[e] << "," << pred << "\n";
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    spill(rc.out_dir + "/predictions.csv", csv.str());
    nlohmann::json j;
    j["mean_connectivity"] = sum / static_cast<double>(mags.size());
    j["n_events"] = mags.size();
    spill(rc.out_dir + "/summary.json", j.dump(2) + "\n");
    write_timing(rc.out_dir, elapsed);
    std::cout << "mean connectivity " << sum / static_cast<double>(mags.size()) << " over "
              << mags.size() << " events in " << elapsed << " s\n";
    return kExitOk;
}

int cmd_sensitivity(const RunConfig& rc, const std::string& mag_dist_path, double amplification,
                    const std::string& estimator, const std::string& model_path, uint64_t events,
                    uint64_t samples) {
    const TransportNetwork net = rc.load_net();
    const auto bridges = rc.load_inventory();
    const GmpeCoefficients gmpe = rc.load_coeffs();

    SensitivityConfig sc;
    sc.magnitude_dist = load_magnitude_dist(slurp(mag_dist_path));
    sc.amplification = amplification;
    sc.n_outer = events;
    sc.n_inner = samples;
    sc.epicenter_lat = rc.epicenter_lat;
    sc.epicenter_lon = rc.epicenter_lon;
    EndToEndSurrogate surrogate;
    if (estimator == "mc-dfs") {
        sc.estimator = SensitivityEstimator::mc_dfs;
    } else if (estimator == "e2e") {
        if (model_path.empty())
            throw CLI::ValidationError("--model", "required for the e2e estimator");
        surrogate.model = load_model(slurp(model_path));
        sc.estimator = SensitivityEstimator::e2e;
        sc.e2e = &surrogate;
    } else {
        throw CLI::ValidationError("--estimator", "expected 'mc-dfs' or 'e2e'");
    }

    const SensitivityReport report = oat_sensitivity(net, bridges, gmpe, sc, rc.seed);
    spill(rc.out_dir + "/sensitivity.csv", report.to_csv());
    nlohmann::json j;
    j["baseline_connectivity"] = report.baseline;
    spill(rc.out_dir + "/summary.json", j.dump(2) + "\n");
    std::cout << "baseline " << report.baseline << ", top bridge " << report.ranking.front().bridge_id
              << " (+" << report.ranking.front().improvement_pct << "%)\n";
    return kExitOk;
}

int cmd_exact(const RunConfig& rc, double magnitude, double uniform_prob) {
    const TransportNetwork net = rc.load_net();
    std::vector<double> probs;
    if (uniform_prob >= 0.0) {
        probs.assign(net.link_count(), uniform_prob);
    } else {
        const auto bridges = rc.load_inventory();
        const GmpeCoefficients gmpe = rc.load_coeffs();
        EarthquakeEvent event{magnitude, rc.epicenter_lat, rc.epicenter_lon};
        probs = roadway_survival_probs(net, bridge_survivals_at(bridges, gmpe, event));
    }
    nlohmann::json j;
    j["p_exact"] = exact_reliability(net, probs);
    spill(rc.out_dir + "/exact.json", j.dump(2) + "\n");
    std::cout << "p_exact " << j["p_exact"].get<double>() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-terminal seismic reliability of transportation networks"};
    app.require_subcommand(1);

    RunConfig rc;
    rc.workers = default_workers();

    // simulate
    auto* sim = app.add_subcommand("simulate", "Monte Carlo connectivity estimate");
    rc.add_options(*sim);
    double sim_magnitude = 7.0;
    std::string sim_dist, sim_checker = "dfs";
    uint64_t sim_samples = 100000, sim_events = 1000;
    bool sim_residuals = false;
    auto* sim_mag = sim->add_option("--magnitude", sim_magnitude, "fixed moment magnitude");
    auto* sim_dist_opt = sim->add_option("--magnitude-dist", sim_dist, "magnitude distribution JSON");
    sim_mag->excludes(sim_dist_opt);
    sim->add_option("--samples", sim_samples, "topology samples (per event when --magnitude-dist)");
    sim->add_option("--events", sim_events, "event samples for --magnitude-dist");
    sim->add_flag("--residuals", sim_residuals, "sample GMPE residual variability");
    sim->add_option("--checker", sim_checker, "dfs | classifier:<model-file>");

    // train
    auto* tr = app.add_subcommand("train", "train a surrogate model");
    rc.add_options(*tr);
    std::string tr_kind, tr_classifier, tr_label_with = "classifier";
    uint64_t tr_samples = 10000, tr_realizations = 1, tr_magnitudes = 3000, tr_topologies = 100000;
    int tr_epochs = -1, tr_batch = 64;
    double tr_lr = 0.001;
    bool tr_augment = false;
    tr->add_option("--kind", tr_kind, "classifier | e2e")->required();
    tr->add_option("--samples", tr_samples, "classifier: magnitude samples");
    tr->add_option("--realizations", tr_realizations, "classifier: topologies per magnitude");
    tr->add_option("--magnitudes", tr_magnitudes, "e2e: magnitude samples");
    tr->add_option("--topologies", tr_topologies, "e2e: topology samples per magnitude");
    tr->add_option("--epochs", tr_epochs, "training epochs (default 150 classifier, 2000 e2e)");
    tr->add_option("--batch", tr_batch, "mini-batch size");
    tr->add_option("--lr", tr_lr, "Adam learning rate");
    tr->add_option("--classifier", tr_classifier, "e2e: classifier model for labeling");
    tr->add_option("--label-with", tr_label_with, "e2e labeling: classifier | dfs");
    tr->add_flag("--augment", tr_augment, "classifier: add extra failed-topology rows");

    // predict
    auto* pr = app.add_subcommand("predict", "end-to-end surrogate prediction");
    rc.add_options(*pr);
    std::string pr_model, pr_dist;
    double pr_magnitude = 7.0;
    uint64_t pr_events = 10000;
    pr->add_option("--model", pr_model, "e2e model JSON")->required();
    auto* pr_mag = pr->add_option("--magnitude", pr_magnitude, "fixed moment magnitude");
    auto* pr_dist_opt = pr->add_option("--magnitude-dist", pr_dist, "magnitude distribution JSON");
    pr_mag->excludes(pr_dist_opt);
    pr->add_option("--events", pr_events, "event samples for --magnitude-dist");

    // sensitivity
    auto* se = app.add_subcommand("sensitivity", "one-at-a-time retrofit ranking");
    rc.add_options(*se);
    std::string se_dist = "data/magnitude_dist.json", se_estimator = "mc-dfs", se_model;
    double se_amplification = 0.10;
    uint64_t se_events = 200, se_samples = 500;
    se->add_option("--magnitude-dist", se_dist, "magnitude distribution JSON");
    se->add_option("--amplification", se_amplification, "survival amplification fraction");
    se->add_option("--estimator", se_estimator, "mc-dfs | e2e");
    se->add_option("--model", se_model, "e2e model JSON");
    se->add_option("--events", se_events, "magnitude draws");
    se->add_option("--samples", se_samples, "topologies per draw (mc-dfs)");

    // exact
    auto* ex = app.add_subcommand("exact", "exact reliability by enumeration");
    rc.add_options(*ex);
    double ex_magnitude = 7.0, ex_prob = -1.0;
    ex->add_option("--magnitude", ex_magnitude, "fixed moment magnitude");
    ex->add_option("--prob", ex_prob, "uniform survival probability for all roadways");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sim->parsed())
            return cmd_simulate(rc, sim_magnitude, sim_dist, sim_samples, sim_events,
                                sim_residuals, sim_checker);
        if (tr->parsed()) {
            if (tr_epochs < 0) tr_epochs = tr_kind == "e2e" ? 2000 : 150;
            return cmd_train(rc, tr_kind, tr_samples, tr_realizations, tr_magnitudes,
                             tr_topologies, tr_epochs, tr_batch, tr_lr, tr_classifier,
                             tr_label_with, tr_augment);
        }
        if (pr->parsed()) return cmd_predict(rc, pr_model, pr_magnitude, pr_dist, pr_events);
        if (se->parsed())
            return cmd_sensitivity(rc, se_dist, se_amplification, se_estimator, se_model,
                                   se_events, se_samples);
        if (ex->parsed()) return cmd_exact(rc, ex_magnitude, ex_prob);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const TrainingDiverged& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
