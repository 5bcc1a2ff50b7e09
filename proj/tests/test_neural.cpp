#include "netrel/neural.hpp"

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "netrel/network.hpp"

using namespace netrel;
using namespace netrel::testing;

namespace {

std::vector<double*> parameter_view(Mlp& model) {
    std::vector<double*> params;
    for (Layer& layer : model.layers()) {
        for (Eigen::Index i = 0; i < layer.weights.size(); ++i)
            params.push_back(layer.weights.data() + i);
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i)
            params.push_back(layer.bias.data() + i);
    }
    return params;
}

std::vector<double> gradient_view(const Gradients& grads) {
    std::vector<double> flat;
    for (size_t l = 0; l < grads.weights.size(); ++l) {
        for (Eigen::Index i = 0; i < grads.weights[l].size(); ++i)
            flat.push_back(grads.weights[l].data()[i]);
        for (Eigen::Index i = 0; i < grads.bias[l].size(); ++i)
            flat.push_back(grads.bias[l].data()[i]);
    }
    return flat;
}

// Max relative error between backprop and central finite differences.
double gradient_check(Mlp& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                      LossKind loss) {
    const Gradients grads = backward(model, x, y, loss);
    const std::vector<double> analytic = gradient_view(grads);
    std::vector<double*> params = parameter_view(model);
    REQUIRE(params.size() == analytic.size());

    const double mid = loss_value(loss, model.forward_batch(x), y);
    double diff_sq = 0.0, ana_sq = 0.0, num_sq = 0.0;
    for (size_t i = 0; i < params.size(); ++i) {
        const double saved = *params[i];
        const double h = 1e-5 * std::max(1.0, std::abs(saved));
        *params[i] = saved + h;
        const double up = loss_value(loss, model.forward_batch(x), y);
        *params[i] = saved - h;
        const double down = loss_value(loss, model.forward_batch(x), y);
        *params[i] = saved;
        // Skip coordinates where a relu kink sits inside the stencil: the
        // two one-sided secants disagree there and central differencing is
        // meaningless.
        const double fwd = (up - mid) / h;
        const double bwd = (mid - down) / h;
        if (std::abs(fwd - bwd) > 1e-3 * std::max({std::abs(fwd), std::abs(bwd), 1e-8})) continue;
        const double numeric = (up - down) / (2 * h);
        diff_sq += (numeric - analytic[i]) * (numeric - analytic[i]);
        ana_sq += analytic[i] * analytic[i];
        num_sq += numeric * numeric;
    }
    // Whole-vector relative error; per-coordinate ratios are dominated by
    // roundoff on coordinates whose true gradient is near zero.
    return std::sqrt(diff_sq) / std::max({std::sqrt(ana_sq), std::sqrt(num_sq), 1e-12});
}

}  // namespace

TEST_CASE("forward basics") {
    SUBCASE("zero weights collapse to the final bias") {
        std::vector<Layer> layers(2);
        layers[0] = {Eigen::MatrixXd::Zero(3, 4), Eigen::RowVectorXd::Zero(4),
                     Activation::identity};
        layers[1] = {Eigen::MatrixXd::Zero(4, 2), Eigen::RowVectorXd::Zero(2),
                     Activation::identity};
        layers[1].bias << 1.5, -2.0;
        const Mlp model(layers);
        Eigen::RowVectorXd x(3);
        x << 0.3, -0.7, 2.0;
        const Eigen::RowVectorXd y = model.forward(x);
        CHECK(y(0) == 1.5);
        CHECK(y(1) == -2.0);
    }
    SUBCASE("relu definition") {
        std::vector<Layer> layers(1);
        layers[0] = {Eigen::MatrixXd::Identity(2, 2), Eigen::RowVectorXd::Zero(2),
                     Activation::relu};
        const Mlp model(layers);
        Eigen::RowVectorXd x(2);
        x << -1.0, 2.0;
        const Eigen::RowVectorXd y = model.forward(x);
        CHECK(y(0) == 0.0);
        CHECK(y(1) == 2.0);
    }
    SUBCASE("single hidden layer reproduces the affine-sigmoid-affine form") {
        std::vector<Layer> layers(2);
        layers[0] = {Eigen::MatrixXd(2, 2), Eigen::RowVectorXd(2), Activation::sigmoid};
        layers[0].weights << 0.5, -0.25, 1.0, 0.75;
        layers[0].bias << 0.1, -0.2;
        layers[1] = {Eigen::MatrixXd(2, 1), Eigen::RowVectorXd(1), Activation::identity};
        layers[1].weights << 2.0, -1.0;
        layers[1].bias << 0.05;
        const Mlp model(layers);
        Eigen::RowVectorXd x(2);
        x << 0.4, -0.6;
        // Hand computation of sigma(x W1 + b1) W2 + b2.
        const double h0 = 1.0 / (1.0 + std::exp(-(0.4 * 0.5 + (-0.6) * 1.0 + 0.1)));
        const double h1 = 1.0 / (1.0 + std::exp(-(0.4 * -0.25 + (-0.6) * 0.75 - 0.2)));
        CHECK(model.forward(x)(0) == doctest::Approx(h0 * 2.0 - h1 + 0.05).epsilon(1e-14));
    }
    SUBCASE("random 3-layer model matches an independent dense evaluation") {
        const Mlp model = Mlp::random({3, 5, 4, 2},
                                      {Activation::tanh_fn, Activation::relu,
                                       Activation::identity},
                                      42);
        Eigen::RowVectorXd x(3);
        x << 0.2, -1.1, 0.7;
        // Layer-by-layer recomputation with plain loops.
        std::vector<double> a(x.data(), x.data() + 3);
        for (const Layer& layer : model.layers()) {
            std::vector<double> z(layer.weights.cols(), 0.0);
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
                for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
                    z[c] += a[r] * layer.weights(r, c);
                z[c] += layer.bias(c);
                if (layer.activation == Activation::tanh_fn) z[c] = std::tanh(z[c]);
                if (layer.activation == Activation::relu) z[c] = std::max(0.0, z[c]);
            }
            a = z;
        }
        const Eigen::RowVectorXd y = model.forward(x);
        for (Eigen::Index i = 0; i < y.size(); ++i)
            CHECK(y(i) == doctest::Approx(a[i]).epsilon(1e-12));
    }
    SUBCASE("dimension and finiteness guards") {
        const Mlp model = Mlp::random({3, 2}, {Activation::identity}, 1);
        Eigen::RowVectorXd bad(2);
        bad << 1, 2;
        CHECK_THROWS_AS(model.forward(bad), ValidationError);
        Eigen::RowVectorXd nan(3);
        nan << 1, std::nan(""), 2;
        CHECK_THROWS_AS(model.forward(nan), ValidationError);
    }
}

TEST_CASE("activation ranges") {
    const Mlp sig = Mlp::random({4, 8, 8, 3},
                                {Activation::sigmoid, Activation::tanh_fn, Activation::relu}, 3);
    Rng rng(17);
    for (int t = 0; t < 100; ++t) {
        Eigen::RowVectorXd x(4);
        for (int i = 0; i < 4; ++i) x(i) = rng.normal() * 3.0;
        Eigen::MatrixXd a = x;
        for (size_t li = 0; li < sig.layers().size(); ++li) {
            Eigen::MatrixXd z = a * sig.layers()[li].weights;
            z.rowwise() += sig.layers()[li].bias;
            if (li == 0) {
                const Mlp head({sig.layers()[0]});
                a = head.forward_batch(x);
                for (Eigen::Index i = 0; i < a.size(); ++i) {
                    CHECK(a(i) > 0.0);
                    CHECK(a(i) < 1.0);
                }
            } else {
                break;
            }
        }
        const Eigen::RowVectorXd out = sig.forward(x);
        for (Eigen::Index i = 0; i < out.size(); ++i) CHECK(out(i) >= 0.0);  // relu output
    }
}

TEST_CASE("loss_mse") {
    Eigen::MatrixXd y(1, 1), yhat(1, 1);
    y << 1.0;
    yhat << 1.0;
    CHECK(loss_mse(yhat, y) == 0.0);
    yhat << 0.0;
    CHECK(loss_mse(yhat, y) == doctest::Approx(0.5).epsilon(1e-15));

    Eigen::MatrixXd y2(2, 2), p2(2, 2);
    y2 << 1, 0, 0, 2;
    p2 << 0, 0, 0, 0;
    CHECK(loss_mse(p2, y2) == doctest::Approx(1.25).epsilon(1e-15));

    Eigen::MatrixXd wrong(3, 1);
    CHECK_THROWS_AS(loss_mse(wrong, y), ValidationError);
}

TEST_CASE("loss_bce") {
    Eigen::MatrixXd y(1, 1), p(1, 1);
    y << 1.0;
    p << 1.0 - 1e-12;
    CHECK(loss_bce(p, y) == doctest::Approx(0.0).epsilon(1e-9));
    p << 0.5;
    CHECK(loss_bce(p, y) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    y << 0.0;
    p << 0.9;
    CHECK(loss_bce(p, y) == doctest::Approx(-std::log(0.1)).epsilon(1e-12));
    y << 0.5;
    CHECK_THROWS_AS(loss_bce(p, y), ValidationError);
}

TEST_CASE("backward closed form for a single linear layer under MSE") {
    std::vector<Layer> layers(1);
    layers[0] = {Eigen::MatrixXd(2, 1), Eigen::RowVectorXd::Zero(1), Activation::identity};
    layers[0].weights << 0.5, -0.3;
    Mlp model(layers);
    Eigen::MatrixXd x(3, 2), y(3, 1);
    x << 1, 2, -1, 0.5, 0.25, -2;
    y << 0.2, -0.4, 1.0;
    const Eigen::MatrixXd pred = model.forward_batch(x);
    const Gradients grads = backward(model, x, y, LossKind::mse);
    const Eigen::MatrixXd expected = x.transpose() * (pred - y) / 3.0;
    CHECK((grads.weights[0] - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("zero gradient at a perfect MSE fit") {
    Mlp model = Mlp::random({2, 3, 1}, {Activation::tanh_fn, Activation::identity}, 5);
    Eigen::MatrixXd x(4, 2);
    x << 1, 0, 0, 1, 1, 1, -1, 0.5;
    const Eigen::MatrixXd y = model.forward_batch(x);
    const Gradients grads = backward(model, x, y, LossKind::mse);
    for (const auto& g : grads.weights) CHECK(g.cwiseAbs().maxCoeff() < 1e-14);
    for (const auto& g : grads.bias) CHECK(g.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("gradients match central finite differences") {
    Rng rng(2718);
    for (int trial = 0; trial < 20; ++trial) {
        const int layers = 2 + static_cast<int>(rng.next_u64() % 3);
        std::vector<Eigen::Index> dims{1 + static_cast<Eigen::Index>(rng.next_u64() % 6)};
        std::vector<Activation> acts;
        const Activation pool[] = {Activation::relu, Activation::sigmoid, Activation::tanh_fn};
        for (int l = 0; l < layers; ++l) {
            dims.push_back(1 + static_cast<Eigen::Index>(rng.next_u64() % 16));
            acts.push_back(pool[rng.next_u64() % 3]);
        }
        const LossKind loss = (trial % 2 == 0) ? LossKind::mse : LossKind::bce;
        if (loss == LossKind::bce) {
            dims.back() = 1;
            acts.back() = Activation::sigmoid;
        } else {
            acts.back() = Activation::identity;
        }
        Mlp model = Mlp::random(dims, acts, 1000 + trial);

        const Eigen::Index m = 5;
        Eigen::MatrixXd x(m, dims.front());
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
        Eigen::MatrixXd y(m, dims.back());
        if (loss == LossKind::bce)
            for (Eigen::Index i = 0; i < y.size(); ++i)
                y.data()[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
        else
            for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.normal();

        CAPTURE(trial);
        REQUIRE(gradient_check(model, x, y, loss) < 1e-5);
    }
}

TEST_CASE("adam_step") {
    SUBCASE("zero gradient is a fixed point") {
        Mlp model = Mlp::random({2, 2}, {Activation::identity}, 8);
        const Eigen::MatrixXd before = model.layers()[0].weights;
        AdamState state = AdamState::for_model(model);
        Gradients zero;
        zero.weights = {Eigen::MatrixXd::Zero(2, 2)};
        zero.bias = {Eigen::RowVectorXd::Zero(2)};
        TrainConfig cfg;
        for (int i = 0; i < 10; ++i) adam_step(model, state, zero, cfg);
        CHECK((model.layers()[0].weights - before).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("first step magnitude is about the learning rate") {
        Mlp model = Mlp::random({1, 1}, {Activation::identity}, 9);
        const double before = model.layers()[0].weights(0, 0);
        AdamState state = AdamState::for_model(model);
        Gradients g;
        g.weights = {Eigen::MatrixXd::Constant(1, 1, 0.37)};
        g.bias = {Eigen::RowVectorXd::Zero(1)};
        TrainConfig cfg;
        adam_step(model, state, g, cfg);
        const double delta = std::abs(model.layers()[0].weights(0, 0) - before);
        CHECK(delta <= cfg.learning_rate);
        CHECK(delta >= cfg.learning_rate * (1 - 1e-6));
    }
    SUBCASE("converges on a scalar quadratic") {
        // minimize (w - 3)^2 from w = 0 via its gradient 2(w - 3)
        std::vector<Layer> layers(1);
        layers[0] = {Eigen::MatrixXd::Zero(1, 1), Eigen::RowVectorXd::Zero(1),
                     Activation::identity};
        Mlp model(layers);
        AdamState state = AdamState::for_model(model);
        TrainConfig cfg;
        cfg.learning_rate = 0.05;
        double prev_loss = 9.0;
        int decreases = 0;
        for (int i = 0; i < 200; ++i) {
            const double w = model.layers()[0].weights(0, 0);
            Gradients g;
            g.weights = {Eigen::MatrixXd::Constant(1, 1, 2.0 * (w - 3.0))};
            g.bias = {Eigen::RowVectorXd::Zero(1)};
            adam_step(model, state, g, cfg);
            const double loss = std::pow(model.layers()[0].weights(0, 0) - 3.0, 2.0);
            if (loss < prev_loss) ++decreases;
            prev_loss = loss;
        }
        CHECK(std::abs(model.layers()[0].weights(0, 0) - 3.0) < 0.5);
        CHECK(decreases > 150);
    }
}

TEST_CASE("train") {
    SUBCASE("zero epochs is a no-op") {
        Mlp model = Mlp::random({2, 4, 1}, {Activation::tanh_fn, Activation::identity}, 12);
        const Eigen::MatrixXd before = model.layers()[0].weights;
        Dataset data;
        data.inputs = Eigen::MatrixXd::Random(8, 2);
        data.targets = Eigen::MatrixXd::Random(8, 1);
        TrainConfig cfg;
        cfg.epochs = 0;
        const auto history = train(model, data, cfg);
        CHECK(history.empty());
        CHECK((model.layers()[0].weights - before).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("learns XOR") {
        Dataset data;
        data.inputs.resize(4, 2);
        data.inputs << 0, 0, 0, 1, 1, 0, 1, 1;
        data.targets.resize(4, 1);
        data.targets << 0, 1, 1, 0;
        Mlp model = Mlp::random({2, 4, 1}, {Activation::tanh_fn, Activation::sigmoid}, 31);
        TrainConfig cfg;
        cfg.epochs = 5000;
        cfg.batch_size = 4;
        cfg.learning_rate = 0.01;
        cfg.loss = LossKind::bce;
        cfg.shuffle_seed = 31;
        const auto history = train(model, data, cfg);
        CHECK(history.back() < 0.1);
    }
    SUBCASE("identical seeds give bit-identical weights") {
        Dataset data;
        data.inputs = Eigen::MatrixXd::Random(32, 3);
        data.targets = Eigen::MatrixXd::Random(32, 1);
        TrainConfig cfg;
        cfg.epochs = 5;
        cfg.batch_size = 8;
        cfg.shuffle_seed = 444;
        Mlp a = Mlp::random({3, 6, 1}, {Activation::relu, Activation::identity}, 444);
        Mlp b = Mlp::random({3, 6, 1}, {Activation::relu, Activation::identity}, 444);
        train(a, data, cfg);
        train(b, data, cfg);
        for (size_t l = 0; l < a.layers().size(); ++l) {
            CHECK(a.layers()[l].weights == b.layers()[l].weights);
            CHECK(a.layers()[l].bias == b.layers()[l].bias);
        }
    }
    SUBCASE("MSE loss on a separable toy set is non-increasing after warm-up") {
        Rng rng(55);
        Dataset data;
        data.inputs.resize(64, 2);
        data.targets.resize(64, 1);
        for (int i = 0; i < 64; ++i) {
            const double cls = i % 2 == 0 ? 1.0 : -1.0;
            data.inputs(i, 0) = cls * (1.0 + rng.uniform());
            data.inputs(i, 1) = rng.normal() * 0.1;
            data.targets(i, 0) = cls > 0 ? 1.0 : 0.0;
        }
        Mlp model = Mlp::random({2, 4, 1}, {Activation::tanh_fn, Activation::sigmoid}, 56);
        TrainConfig cfg;
        cfg.epochs = 60;
        cfg.batch_size = 16;
        cfg.learning_rate = 0.002;
        cfg.loss = LossKind::mse;
        cfg.shuffle_seed = 56;
        const auto history = train(model, data, cfg);
        for (size_t e = 6; e < history.size(); ++e) CHECK(history[e] <= history[e - 1] + 1e-6);
    }
}

TEST_CASE("model serialization") {
    const Mlp model = Mlp::random({3, 5, 2}, {Activation::relu, Activation::sigmoid}, 88);
    const std::string text = save_model(model);
    const Mlp loaded = load_model(text);
    CHECK(save_model(loaded) == text);  // save -> load -> save is stable
    for (size_t l = 0; l < model.layers().size(); ++l) {
        CHECK(model.layers()[l].weights == loaded.layers()[l].weights);
        CHECK(model.layers()[l].bias == loaded.layers()[l].bias);
    }

    CHECK_THROWS_AS(load_model(text.substr(0, text.size() / 2)), ParseError);
    CHECK_THROWS_AS(load_model(R"({"layers":[
        {"activation":"relu","weights":[[1,2],[3,4]],"bias":[0,0]},
        {"activation":"identity","weights":[[1],[2],[3]],"bias":[0]}]})"),
                    ValidationError);
}
