#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "mmloc/error.hpp"
#include "mmloc/mlp.hpp"

using namespace mmloc;

namespace {

MlpParams random_params(const std::vector<int>& dims, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    MlpParams p;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Eigen::MatrixXd w(dims[l + 1], dims[l]);
        Eigen::VectorXd b(dims[l + 1]);
        for (int i = 0; i < w.rows(); ++i) {
            for (int j = 0; j < w.cols(); ++j) w(i, j) = u(rng);
            b(i) = u(rng);
        }
        p.weights.push_back(w);
        p.biases.push_back(b);
    }
    return p;
}

double numeric_gradient_check(const MlpParams& base, const Eigen::MatrixXd& x,
                              const Eigen::MatrixXd& y) {
    std::vector<Eigen::MatrixXd> gw;
    std::vector<Eigen::VectorXd> gb;
    mlp_loss_and_gradients(base, x, y, &gw, &gb);

    const double step = 1e-6;
    double worst = 0.0;
    auto probe = [&](double* slot, double analytic) {
        const double keep = *slot;
        *slot = keep + step;
        const double up = mlp_loss_and_gradients(base, x, y, nullptr, nullptr);
        *slot = keep - step;
        const double dn = mlp_loss_and_gradients(base, x, y, nullptr, nullptr);
        *slot = keep;
        const double numeric = (up - dn) / (2.0 * step);
        const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
        worst = std::max(worst, std::abs(numeric - analytic) / scale);
    };

    // MlpParams is passed by const ref but we restore every slot we touch.
    MlpParams& p = const_cast<MlpParams&>(base);
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        for (int i = 0; i < p.weights[l].rows(); ++i) {
            for (int j = 0; j < p.weights[l].cols(); ++j) {
                probe(&p.weights[l](i, j), gw[l](i, j));
            }
            probe(&p.biases[l](i), gb[l](i));
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("zero-parameter network emits the sigmoid midpoint") {
    MlpParams p;
    p.weights = {Eigen::MatrixXd::Zero(4, 2), Eigen::MatrixXd::Zero(3, 4)};
    p.biases = {Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(3)};
    const Eigen::VectorXd out = mlp_forward(p, Eigen::Vector2d(0.3, 0.9));
    REQUIRE(out.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(out(i) == doctest::Approx(0.5));
}

TEST_CASE("backpropagation matches central differences") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const std::vector<std::vector<int>> shapes = {
        {2, 5, 1}, {3, 4, 4, 2}, {6, 8, 3}, {1, 3, 1}, {4, 7, 5, 2}};
    double worst = 0.0;
    for (const auto& dims : shapes) {
        const MlpParams p = random_params(dims, rng);
        Eigen::MatrixXd x(dims.front(), 6);
        Eigen::MatrixXd y(dims.back(), 6);
        for (int i = 0; i < x.size(); ++i) x.data()[i] = u01(rng);
        for (int i = 0; i < y.size(); ++i) y.data()[i] = u01(rng);
        worst = std::max(worst, numeric_gradient_check(p, x, y));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("training fits a smooth map and is deterministic per seed") {
    // Target: y = [0.5*sin(x0)+0.5*x1, x0*x1] on [0,1]^2.
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const int n = 600;
    TrainingSet data;
    data.inputs.resize(2, n);
    data.targets.resize(2, n);
    for (int i = 0; i < n; ++i) {
        const double a = u01(rng), b = u01(rng);
        data.inputs.col(i) << a, b;
        data.targets.col(i) << 0.5 * std::sin(a) + 0.5 * b, a * b;
    }

    TrainOptions opts;
    opts.hidden = {16, 16};
    opts.epochs = 300;
    opts.batch_size = 64;
    opts.seed = 3;
    const TrainedNet net = train_net(data, opts);

    double mse = 0.0;
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd pred = net_predict(net, data.inputs.col(i));
        mse += (pred - data.targets.col(i)).squaredNorm();
    }
    mse /= n;
    CHECK(mse < 1e-3);
    CHECK(net.best_validation_mse > 0.0);

    const TrainedNet again = train_net(data, opts);
    const Eigen::Vector2d probe(0.25, 0.75);
    CHECK((net_predict(net, probe) - net_predict(again, probe)).norm() == 0.0);

    TrainOptions other = opts;
    other.seed = 4;
    const TrainedNet different = train_net(data, other);
    CHECK((net_predict(net, probe) - net_predict(different, probe)).norm() > 0.0);
}

TEST_CASE("normalization floors degenerate spans") {
    Eigen::MatrixXd cols(2, 3);
    cols << 1.0, 1.0, 1.0,   // constant component
            -2.0, 0.0, 2.0;
    const NormalizationSpec spec = NormalizationSpec::fit(cols);
    CHECK(spec.span(0) > 0.0);
    CHECK(spec.span(1) == doctest::Approx(4.0));
    const Eigen::VectorXd enc = spec.encode(Eigen::Vector2d(1.0, 2.0));
    CHECK(enc(0) == doctest::Approx(0.0));
    CHECK(enc(1) == doctest::Approx(1.0));
    const Eigen::VectorXd dec = spec.decode(enc);
    CHECK(dec(0) == doctest::Approx(1.0));
    CHECK(dec(1) == doctest::Approx(2.0));
}

TEST_CASE("serialization round-trips bitwise") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    TrainingSet data;
    data.inputs.resize(3, 80);
    data.targets.resize(2, 80);
    for (int i = 0; i < data.inputs.size(); ++i) data.inputs.data()[i] = u01(rng);
    for (int i = 0; i < data.targets.size(); ++i) data.targets.data()[i] = u01(rng);

    TrainOptions opts;
    opts.hidden = {8};
    opts.epochs = 20;
    opts.seed = 9;
    const TrainedNet net = train_net(data, opts);

    const std::string path = "roundtrip_test.net";
    save_net(net, path);
    const TrainedNet back = load_net(path);
    std::remove(path.c_str());

    REQUIRE(back.params.weights.size() == net.params.weights.size());
    for (std::size_t l = 0; l < net.params.weights.size(); ++l) {
        CHECK((back.params.weights[l] - net.params.weights[l]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((back.params.biases[l] - net.params.biases[l]).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK((back.input_norm.lo - net.input_norm.lo).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.target_norm.span - net.target_norm.span).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.best_validation_mse == net.best_validation_mse);

    std::mt19937_64 prng(33);
    Eigen::Vector3d probe;
    for (int i = 0; i < 3; ++i) probe(i) = u01(prng);
    CHECK((net_predict(back, probe) - net_predict(net, probe)).norm() == 0.0);
}

TEST_CASE("degenerate training inputs are rejected") {
    TrainingSet empty;
    empty.inputs.resize(2, 0);
    empty.targets.resize(2, 0);
    CHECK_THROWS_AS(train_net(empty, TrainOptions{}), error);

    TrainingSet mismatched;
    mismatched.inputs.resize(2, 10);
    mismatched.targets.resize(2, 9);
    CHECK_THROWS_AS(train_net(mismatched, TrainOptions{}), error);

    CHECK_THROWS_AS(load_net("/nonexistent/never.net"), error);
}
