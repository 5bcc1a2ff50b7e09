#include "netrel/neural.hpp"

#include <cmath>
#include <numeric>

#include "json.hpp"
#include "netrel/network.hpp"  // ParseError / ValidationError

namespace netrel {

namespace {
constexpr double kBceClamp = 1e-12;

Eigen::MatrixXd apply_activation(Activation a, const Eigen::MatrixXd& z) {
    switch (a) {
        case Activation::relu: return z.cwiseMax(0.0);
        case Activation::sigmoid:
            return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
        case Activation::tanh_fn: return z.array().tanh().matrix();
        case Activation::identity: return z;
    }
    throw ValidationError("unknown activation");
}

// Derivative expressed through pre-activation z and post-activation a.
Eigen::MatrixXd activation_grad(Activation act, const Eigen::MatrixXd& z,
                                const Eigen::MatrixXd& a) {
    switch (act) {
        case Activation::relu:
            return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
        case Activation::sigmoid:
            return (a.array() * (1.0 - a.array())).matrix();
        case Activation::tanh_fn:
            return (1.0 - a.array().square()).matrix();
        case Activation::identity:
            return Eigen::MatrixXd::Ones(z.rows(), z.cols());
    }
    throw ValidationError("unknown activation");
}
}  // namespace

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "tanh") return Activation::tanh_fn;
    if (s == "identity") return Activation::identity;
    throw ParseError("unknown activation '" + s + "'");
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::tanh_fn: return "tanh";
        case Activation::identity: return "identity";
    }
    return "?";
}

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ValidationError("model must have at least one layer");
    for (size_t i = 0; i < layers_.size(); ++i) {
        if (layers_[i].bias.size() != layers_[i].weights.cols())
            throw ValidationError("layer " + std::to_string(i) + ": bias size mismatch");
        if (i > 0 && layers_[i].weights.rows() != layers_[i - 1].weights.cols())
            throw ValidationError("layer " + std::to_string(i) +
                                  ": input dim does not chain with previous layer");
        if (!layers_[i].weights.allFinite() || !layers_[i].bias.allFinite())
            throw ValidationError("layer " + std::to_string(i) + ": non-finite parameters");
    }
}

Mlp Mlp::random(const std::vector<Eigen::Index>& dims,
                const std::vector<Activation>& activations, uint64_t seed) {
    if (dims.size() < 2 || activations.size() != dims.size() - 1)
        throw ValidationError("need dims {d, h1, ..., k} and one activation per layer");
    Rng rng(Rng::derive_key({seed, 0x696e6974ULL}));
    std::vector<Layer> layers;
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        Layer layer;
        const double bound = std::sqrt(6.0 / static_cast<double>(dims[i] + dims[i + 1]));
        layer.weights = Eigen::MatrixXd::NullaryExpr(
            dims[i], dims[i + 1], [&]() { return bound * (2.0 * rng.uniform() - 1.0); });
        layer.bias = Eigen::RowVectorXd::Zero(dims[i + 1]);
        layer.activation = activations[i];
        layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers));
}

Eigen::RowVectorXd Mlp::forward(const Eigen::RowVectorXd& input) const {
    return forward_batch(input);
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& inputs) const {
    if (inputs.cols() != input_dim())
        throw ValidationError("input dim " + std::to_string(inputs.cols()) +
                              " does not match model dim " + std::to_string(input_dim()));
    if (!inputs.allFinite()) throw ValidationError("non-finite model input");
    Eigen::MatrixXd a = inputs;
    for (const Layer& layer : layers_) {
        Eigen::MatrixXd z = a * layer.weights;
        z.rowwise() += layer.bias;
        a = apply_activation(layer.activation, z);
    }
    return a;
}

double loss_mse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw ValidationError("prediction/target shape mismatch");
    return (pred - target).squaredNorm() / (2.0 * static_cast<double>(pred.rows()));
}

double loss_bce(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw ValidationError("prediction/target shape mismatch");
    for (Eigen::Index i = 0; i < target.size(); ++i) {
        const double y = target.reshaped()(i);
        if (y != 0.0 && y != 1.0) throw ValidationError("BCE targets must be 0 or 1");
    }
    const auto p = pred.array().min(1.0 - kBceClamp).max(kBceClamp);
    const auto y = target.array();
    return -(y * p.log() + (1.0 - y) * (1.0 - p).log()).sum();
}

double loss_value(LossKind kind, const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
    return kind == LossKind::mse ? loss_mse(pred, target) : loss_bce(pred, target);
}

Gradients backward(const Mlp& model, const Eigen::MatrixXd& inputs,
                   const Eigen::MatrixXd& targets, LossKind loss) {
    if (inputs.rows() == 0) throw ValidationError("empty batch");
    const auto& layers = model.layers();

    // Forward pass, keeping pre- and post-activations per layer.
    std::vector<Eigen::MatrixXd> zs(layers.size());
    std::vector<Eigen::MatrixXd> as(layers.size() + 1);
    as[0] = inputs;
    for (size_t i = 0; i < layers.size(); ++i) {
        zs[i] = as[i] * layers[i].weights;
        zs[i].rowwise() += layers[i].bias;
        as[i + 1] = apply_activation(layers[i].activation, zs[i]);
    }

    const Eigen::MatrixXd& pred = as.back();
    if (pred.rows() != targets.rows() || pred.cols() != targets.cols())
        throw ValidationError("prediction/target shape mismatch");

    Eigen::MatrixXd d_out;
    if (loss == LossKind::mse) {
        d_out = (pred - targets) / static_cast<double>(inputs.rows());
    } else {
        const auto p = pred.array().min(1.0 - kBceClamp).max(kBceClamp);
        const auto y = targets.array();
        d_out = (-(y / p) + (1.0 - y) / (1.0 - p)).matrix();
    }

    Gradients grads;
    grads.weights.resize(layers.size());
    grads.bias.resize(layers.size());
    Eigen::MatrixXd delta;
    for (size_t i = layers.size(); i-- > 0;) {
        const Eigen::MatrixXd upstream =
            (i + 1 == layers.size()) ? d_out : Eigen::MatrixXd(delta * layers[i + 1].weights.transpose());
        delta = upstream.cwiseProduct(activation_grad(layers[i].activation, zs[i], as[i + 1]));
        grads.weights[i] = as[i].transpose() * delta;
        grads.bias[i] = delta.colwise().sum();
    }
    return grads;
}

AdamState AdamState::for_model(const Mlp& model) {
    AdamState s;
    for (const Layer& layer : model.layers()) {
        s.m_w.push_back(Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
        s.v_w.push_back(Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()));
        s.m_b.push_back(Eigen::RowVectorXd::Zero(layer.bias.size()));
        s.v_b.push_back(Eigen::RowVectorXd::Zero(layer.bias.size()));
    }
    return s;
}

namespace {
template <typename Param, typename Moment>
void adam_update(Param& param, Moment& m, Moment& v, const Param& grad,
                 const TrainConfig& c, double bias1, double bias2) {
    m = c.adam_beta1 * m + (1.0 - c.adam_beta1) * grad;
    v = (c.adam_beta2 * v.array() + (1.0 - c.adam_beta2) * grad.array().square()).matrix();
    const auto m_hat = m.array() / bias1;
    const auto v_hat = v.array() / bias2;
    param = (param.array() - c.learning_rate * m_hat / (v_hat.sqrt() + c.adam_epsilon)).matrix();
}
}  // namespace

void adam_step(Mlp& model, AdamState& state, const Gradients& grads, const TrainConfig& config) {
    if (state.m_w.size() != model.layers().size())
        throw ValidationError("optimizer state does not match model");
    ++state.step;
    const double bias1 = 1.0 - std::pow(config.adam_beta1, state.step);
    const double bias2 = 1.0 - std::pow(config.adam_beta2, state.step);
    for (size_t i = 0; i < model.layers().size(); ++i) {
        adam_update(model.layers()[i].weights, state.m_w[i], state.v_w[i], grads.weights[i],
                    config, bias1, bias2);
        adam_update(model.layers()[i].bias, state.m_b[i], state.v_b[i], grads.bias[i],
                    config, bias1, bias2);
    }
}

std::vector<double> train(Mlp& model, const Dataset& data, const TrainConfig& config) {
    if (config.batch_size < 1 || !(config.learning_rate > 0))
        throw ValidationError("invalid training configuration");
    if (data.inputs.rows() != data.targets.rows())
        throw ValidationError("dataset row counts differ");
    if (data.inputs.cols() != model.input_dim() || data.targets.cols() != model.output_dim())
        throw ValidationError("dataset dimensions do not match model");

    const Eigen::Index m = data.inputs.rows();
    std::vector<Eigen::Index> order(m);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    AdamState state = AdamState::for_model(model);

    std::vector<double> history;
    history.reserve(config.epochs);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng(Rng::derive_key({config.shuffle_seed, 0x73687566ULL, static_cast<uint64_t>(epoch)}));
        rng.shuffle(std::span<Eigen::Index>(order));
        for (Eigen::Index begin = 0; begin < m; begin += config.batch_size) {
            const Eigen::Index size = std::min<Eigen::Index>(config.batch_size, m - begin);
            Eigen::MatrixXd bx(size, data.inputs.cols());
            Eigen::MatrixXd by(size, data.targets.cols());
            for (Eigen::Index r = 0; r < size; ++r) {
                bx.row(r) = data.inputs.row(order[begin + r]);
                by.row(r) = data.targets.row(order[begin + r]);
            }
            adam_step(model, state, backward(model, bx, by, config.loss), config);
        }
        const double epoch_loss =
            loss_value(config.loss, model.forward_batch(data.inputs), data.targets);
        if (!std::isfinite(epoch_loss))
            throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch));
        history.push_back(epoch_loss);
    }
    return history;
}

std::string save_model(const Mlp& model) {
    nlohmann::json j;
    j["layers"] = nlohmann::json::array();
    for (const Layer& layer : model.layers()) {
        nlohmann::json jl;
        jl["activation"] = to_string(layer.activation);
        std::vector<std::vector<double>> w(layer.weights.rows());
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            w[r].resize(layer.weights.cols());
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) w[r][c] = layer.weights(r, c);
        }
        jl["weights"] = w;
        jl["bias"] = std::vector<double>(layer.bias.begin(), layer.bias.end());
        j["layers"].push_back(std::move(jl));
    }
    return j.dump(2) + "\n";
}

Mlp load_model(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model file: ") + e.what());
    }
    std::vector<Layer> layers;
    try {
        for (const auto& jl : j.at("layers")) {
            Layer layer;
            layer.activation = activation_from_string(jl.at("activation").get<std::string>());
            const auto w = jl.at("weights").get<std::vector<std::vector<double>>>();
            if (w.empty() || w[0].empty()) throw ParseError("model file: empty weight matrix");
            layer.weights.resize(static_cast<Eigen::Index>(w.size()),
                                 static_cast<Eigen::Index>(w[0].size()));
            for (size_t r = 0; r < w.size(); ++r) {
                if (w[r].size() != w[0].size())
                    throw ParseError("model file: ragged weight matrix");
                for (size_t c = 0; c < w[r].size(); ++c)
                    layer.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = w[r][c];
            }
            const auto b = jl.at("bias").get<std::vector<double>>();
            layer.bias = Eigen::Map<const Eigen::RowVectorXd>(b.data(),
                                                              static_cast<Eigen::Index>(b.size()));
            layers.push_back(std::move(layer));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model file: ") + e.what());
    }
    return Mlp(std::move(layers));  // constructor validates dimension chaining
}

}  // namespace netrel
