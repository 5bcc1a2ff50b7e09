#ifndef NETREL_NEURAL_HPP
#define NETREL_NEURAL_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

#include "netrel/rng.hpp"

namespace netrel {

enum class Activation { relu, sigmoid, tanh_fn, identity };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

enum class LossKind { mse, bce };

struct TrainingDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Layer {
    Eigen::MatrixXd weights;    // input_dim x output_dim
    Eigen::RowVectorXd bias;    // 1 x output_dim
    Activation activation = Activation::identity;
};

// Plain feed-forward network; rows are samples throughout.
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<Layer> layers);

    // Glorot-uniform initialized model: dims = {d, h1, ..., k}.
    static Mlp random(const std::vector<Eigen::Index>& dims,
                      const std::vector<Activation>& activations, uint64_t seed);

    Eigen::Index input_dim() const { return layers_.front().weights.rows(); }
    Eigen::Index output_dim() const { return layers_.back().weights.cols(); }
    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }

    Eigen::RowVectorXd forward(const Eigen::RowVectorXd& input) const;
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;

private:
    std::vector<Layer> layers_;
};

struct Dataset {
    Eigen::MatrixXd inputs;   // M x d
    Eigen::MatrixXd targets;  // M x k
};

struct TrainConfig {
    int epochs = 100;
    int batch_size = 64;
    double learning_rate = 0.001;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    LossKind loss = LossKind::mse;
    uint64_t shuffle_seed = 0;
};

// E = (1/2M) sum_i ||y_i - yhat_i||^2
double loss_mse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

// E = -sum_i [ y_i log(yhat_i) + (1 - y_i) log(1 - yhat_i) ], predictions
// clamped to [1e-12, 1 - 1e-12].
double loss_bce(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

double loss_value(LossKind kind, const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::RowVectorXd> bias;
};

Gradients backward(const Mlp& model, const Eigen::MatrixXd& inputs,
                   const Eigen::MatrixXd& targets, LossKind loss);

struct AdamState {
    std::vector<Eigen::MatrixXd> m_w, v_w;
    std::vector<Eigen::RowVectorXd> m_b, v_b;
    long step = 0;

    static AdamState for_model(const Mlp& model);
};

void adam_step(Mlp& model, AdamState& state, const Gradients& grads, const TrainConfig& config);

// Mini-batch training; returns the full-dataset loss after each epoch.
// Throws TrainingDiverged on a non-finite loss.
std::vector<double> train(Mlp& model, const Dataset& data, const TrainConfig& config);

std::string save_model(const Mlp& model);
Mlp load_model(const std::string& text);

}  // namespace netrel

#endif
