#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "mmloc/dataset.hpp"
#include "mmloc/geometry.hpp"
#include "mmloc/mapping.hpp"
#include "mmloc/neural_estimators.hpp"
#include "mmloc/wls.hpp"

using namespace mmloc;

namespace {

// A net whose prediction is exactly zero for every input: zero parameters
// make the sigmoid output 0.5, and the target map decodes 0.5 to 0.
TrainedNet zero_prediction_net(int dim) {
    TrainedNet net;
    net.params.weights = {Eigen::MatrixXd::Zero(dim, dim)};
    net.params.biases = {Eigen::VectorXd::Zero(dim)};
    net.input_norm.lo = Eigen::VectorXd::Zero(dim);
    net.input_norm.span = Eigen::VectorXd::Ones(dim);
    net.target_norm.lo = Eigen::VectorXd::Constant(dim, -1.0);
    net.target_norm.span = Eigen::VectorXd::Constant(dim, 2.0);
    return net;
}

void split_dataset(const ResidualDataset& all, int train_count,
                   ResidualDataset* train, ResidualDataset* test) {
    train->na = test->na = all.na;
    train->samples.assign(all.samples.begin(), all.samples.begin() + train_count);
    test->samples.assign(all.samples.begin() + train_count, all.samples.end());
}

}  // namespace

TEST_CASE("zero prediction reduces both net solves to plain least squares") {
    const Scenario sc = scenario_preset("hex6");
    NoiseModel noise;
    noise.sigma_d = 0.1;
    noise.sigma_a = 0.01;
    const MeasurementSet clean = true_measurements(sc, noise, 6);
    const TrainedNet net = zero_prediction_net(clean.dim());

    const JointEstimate a = wlsnet_estimate(net, clean.m, sc.rrhs);
    const JointEstimate b = lsnet_estimate(net, clean.m, sc.rrhs);

    CHECK((a.position - sc.ue_pos).norm() < 1e-6);
    CHECK((a.velocity - sc.ue_vel).norm() < 1e-6);
    CHECK((b.position - sc.ue_pos).norm() < 1e-6);
    CHECK((b.velocity - sc.ue_vel).norm() < 1e-6);
    CHECK((a.position - b.position).norm() < 1e-9);
    CHECK(a.velocity_valid);
}

TEST_CASE("learned error weighting beats the plain solve on offset-heavy data") {
    const Scenario sc = scenario_preset("hex6");
    const NoiseModel noise = family_noise("D1", 2024);
    const int na = 6;
    const int n_train = 3000, n_test = 400;

    const ResidualDataset all =
        generate_residual_dataset(sc, noise, na, n_train + n_test);
    ResidualDataset train, test;
    split_dataset(all, n_train, &train, &test);

    TrainOptions topts;
    topts.epochs = 60;
    topts.seed = 7;
    const TrainedNet net = train_residual_net(train, topts);

    const Eigen::VectorXd gaussian = gaussian_sigmas(noise, na);
    double se_wls = 0.0, se_wlsnet = 0.0, se_lsnet = 0.0;
    for (const ResidualSample& s : test.samples) {
        MeasurementSet ms;
        ms.na = na;
        ms.m = s.m;
        ms.q = gaussian.array().square().matrix().asDiagonal();
        const JointEstimate base = estimate_joint(ms, sc.rrhs);
        const JointEstimate wn = wlsnet_estimate(net, s.m, sc.rrhs);
        const JointEstimate ln = lsnet_estimate(net, s.m, sc.rrhs);
        se_wls += (base.position - s.position).squaredNorm();
        se_wlsnet += (wn.position - s.position).squaredNorm();
        se_lsnet += (ln.position - s.position).squaredNorm();
    }
    const double n = static_cast<double>(test.samples.size());
    const double rmse_wls = std::sqrt(se_wls / n);
    const double rmse_wlsnet = std::sqrt(se_wlsnet / n);
    const double rmse_lsnet = std::sqrt(se_lsnet / n);

    INFO("rmse wls=", rmse_wls, " wlsnet=", rmse_wlsnet, " lsnet=", rmse_lsnet);
    CHECK(rmse_wlsnet < rmse_wls);
    CHECK(rmse_lsnet < rmse_wls);
}

TEST_CASE("mapping net learns the equation error; square solve is weight-invariant") {
    const Scenario sc = scenario_preset("hex6");
    const NoiseModel noise = family_noise("D1", 515);
    const int n_train = 1000, n_test = 200;

    const MappingResidualDataset all =
        generate_mapping_residual_dataset(sc, noise, 2, n_train + n_test);
    MappingResidualDataset train, test;
    train.rrh_index = test.rrh_index = all.rrh_index;
    train.samples.assign(all.samples.begin(), all.samples.begin() + n_train);
    test.samples.assign(all.samples.begin() + n_train, all.samples.end());

    TrainOptions topts;
    topts.epochs = 80;
    topts.seed = 5;
    const TrainedNet net = train_mapping_net(train, topts);

    // Held-out prediction quality: the learned equation error explains most
    // of the true equation-error power.
    double se_pred = 0.0, power = 0.0;
    for (const MappingResidualSample& s : test.samples) {
        const Eigen::VectorXd ehat = net_predict(net, s.m_s);
        se_pred += (ehat - s.residual).squaredNorm();
        power += s.residual.squaredNorm();
    }
    INFO("unexplained fraction=", se_pred / power);
    CHECK(se_pred < 0.1 * power);

    // The reflection system is square (three equations, three unknowns), so
    // any invertible weighting gives the same solution: the net-weighted
    // single pass must agree with the iterative re-weighted solve.  Agreement
    // is analytic; the tolerance only absorbs the conditioning of the
    // projected normal matrix, whose weighting spans a ~1e6 dynamic range.
    const double fluct_d = noise.sigma_d * noise.fluctuating_ratio_tdoa;
    const double fluct_a = noise.sigma_a * noise.fluctuating_ratio_aoa;
    for (int i = 0; i < 20; ++i) {
        const MappingResidualSample& s = test.samples[static_cast<std::size_t>(i)];
        MappingMeasurement mm;
        mm.rrh_index = 2;
        mm.m_s = s.m_s;
        mm.q_s = Eigen::Vector3d(fluct_d * fluct_d, fluct_a * fluct_a,
                                 fluct_a * fluct_a)
                     .asDiagonal();
        const ScattererEstimate plain = estimate_scatterer(mm, sc.ue_pos, sc.rrhs);
        const ScattererEstimate assisted =
            scatterer_net_estimate(net, mm, sc.ue_pos, sc.rrhs);
        CHECK((plain.position - assisted.position).norm() < 5e-3);
    }
}

TEST_CASE("direct state regression is well-formed and deterministic") {
    const Scenario sc = scenario_preset("hex6");
    const NoiseModel noise = family_noise("D1", 99);
    const ResidualDataset ds = generate_residual_dataset(sc, noise, 6, 2000);

    TrainOptions topts;
    topts.epochs = 40;
    topts.seed = 13;
    const TrainedNet net = train_fp_net(ds, topts);
    const TrainedNet net2 = train_fp_net(ds, topts);

    const ResidualSample& probe = ds.samples.front();
    const JointEstimate est = fp_estimate(net, probe.m);
    const JointEstimate est2 = fp_estimate(net2, probe.m);

    CHECK(est.velocity_valid);
    // Regression output stays in the neighborhood of the sampling box.
    CHECK((est.position - sc.ue_pos).norm() < 120.0);
    CHECK((est.velocity - sc.ue_vel).norm() < 20.0);
    CHECK((est.position - est2.position).norm() == 0.0);
    CHECK((est.velocity - est2.velocity).norm() == 0.0);
}
