#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mmloc/dataset.hpp"
#include "mmloc/error.hpp"
#include "mmloc/harness.hpp"

using namespace mmloc;

namespace {

RunConfig base_config(int trials, std::uint64_t seed) {
    RunConfig cfg;
    cfg.scenario = scenario_preset("hex6");
    cfg.noise.kind = NoiseModel::Kind::gaussian;
    cfg.noise.sigma_d = 0.4;
    cfg.noise.sigma_a = 0.001;
    cfg.trials = trials;
    cfg.na = 6;
    cfg.master_seed = seed;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("noise-free runs land on the truth") {
    RunConfig cfg = base_config(10, 1);
    cfg.noise.sigma_d = 0.0;
    cfg.noise.sigma_a = 0.0;
    cfg.with_mapping = true;
    const MetricsReport rep = monte_carlo(cfg);
    CHECK(rep.rmse_u < 1e-6);
    CHECK(rep.rmse_udot < 1e-6);
    REQUIRE(rep.rmse_s.size() == 1);
    CHECK(rep.rmse_s[0] < 1e-6);
    CHECK(rep.failures == 0);
    CHECK(rep.velocity_valid);
    REQUIRE(rep.mapped_rrhs.size() == 1);
    CHECK(rep.mapped_rrhs[0] == 2);
}

TEST_CASE("repeat runs are bitwise identical and parallel matches serial") {
    const RunConfig cfg = base_config(64, 99);
    const MetricsReport a = monte_carlo(cfg);
    const MetricsReport b = monte_carlo(cfg);
    const MetricsReport s = monte_carlo_serial(cfg);

    CHECK(a.rmse_u == b.rmse_u);
    CHECK(a.rmse_udot == b.rmse_udot);
    CHECK(a.rmse_u == s.rmse_u);
    CHECK(a.rmse_udot == s.rmse_udot);
    CHECK((a.mean_error - s.mean_error).cwiseAbs().maxCoeff() == 0.0);

    RunConfig other = cfg;
    other.master_seed = 100;
    const MetricsReport c = monte_carlo(other);
    CHECK(c.rmse_u != a.rmse_u);
}

TEST_CASE("matched seeds preserve monotonicity across the noise sweep") {
    std::vector<double> rmse_u, rmse_v;
    for (const double rho : {1e-3, 1e-2, 1e-1, 1.0}) {
        RunConfig cfg = base_config(200, 7);
        cfg.noise.sigma_d = 40.0 * rho;
        cfg.noise.sigma_a = 0.1 * rho;
        cfg.rho = rho;
        const MetricsReport rep = monte_carlo(cfg);
        rmse_u.push_back(rep.rmse_u);
        rmse_v.push_back(rep.rmse_udot);
        CHECK(rep.crlb_pos > 0.0);
        CHECK(rep.crlb_vel > 0.0);
    }
    for (std::size_t i = 1; i < rmse_u.size(); ++i) {
        CHECK(rmse_u[i] > rmse_u[i - 1]);
        CHECK(rmse_v[i] > rmse_v[i - 1]);
    }
}

TEST_CASE("matched seeds keep receiver-count sweeps monotone") {
    std::vector<double> rmse_u;
    for (int na = 2; na <= 6; ++na) {
        RunConfig cfg = base_config(200, 7);
        cfg.na = na;
        const MetricsReport rep = monte_carlo(cfg);
        rmse_u.push_back(rep.rmse_u);
        CHECK(rep.velocity_valid == (na >= 4));
    }
    for (std::size_t i = 1; i < rmse_u.size(); ++i) {
        CHECK(rmse_u[i] <= rmse_u[i - 1]);
    }
}

TEST_CASE("per-trial draws behave like white noise across trial indices") {
    RunConfig cfg = base_config(10000, 31);
    cfg.keep_trials = true;
    const MetricsReport rep = monte_carlo(cfg);
    REQUIRE(rep.trial_pos_error.size() == 10000);

    double mean = 0.0;
    for (const double e : rep.trial_pos_error) mean += e;
    mean /= static_cast<double>(rep.trial_pos_error.size());

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + 1 < rep.trial_pos_error.size(); ++i) {
        num += (rep.trial_pos_error[i] - mean) * (rep.trial_pos_error[i + 1] - mean);
    }
    for (const double e : rep.trial_pos_error) den += (e - mean) * (e - mean);
    CHECK(std::abs(num / den) < 0.05);
}

TEST_CASE("summary statistics equal a two-pass recomputation") {
    RunConfig cfg = base_config(500, 12);
    cfg.keep_trials = true;
    const MetricsReport rep = monte_carlo(cfg);
    REQUIRE(rep.trial_pos_error.size() == 500);
    REQUIRE(rep.trial_vel_error.size() == 500);

    long double su = 0.0L, sv = 0.0L;
    for (std::size_t i = 0; i < rep.trial_pos_error.size(); ++i) {
        su += static_cast<long double>(rep.trial_pos_error[i]) *
              rep.trial_pos_error[i];
        sv += static_cast<long double>(rep.trial_vel_error[i]) *
              rep.trial_vel_error[i];
    }
    const double rmse_u = std::sqrt(static_cast<double>(su / 500.0L));
    const double rmse_v = std::sqrt(static_cast<double>(sv / 500.0L));
    CHECK(std::abs(rep.rmse_u - rmse_u) < 1e-12);
    CHECK(std::abs(rep.rmse_udot - rmse_v) < 1e-12);
}

TEST_CASE("learned estimators without their assets fail loudly") {
    RunConfig cfg = base_config(10, 3);
    cfg.estimator = EstimatorKind::wlsnet;
    CHECK_THROWS_AS(monte_carlo(cfg), error);

    cfg.estimator = EstimatorKind::ewlsnet;
    CHECK_THROWS_AS(monte_carlo(cfg), error);
}

TEST_CASE("excessive failures abort the run") {
    RunConfig cfg = base_config(20, 5);
    // Collapse the geometry: receivers 1..6 all at the same point makes every
    // trial's normal matrix singular.
    for (auto& b : cfg.scenario.rrhs) b = Vec3(0.0, 0.0, 0.0);
    cfg.scenario.scatterers.assign(6, std::nullopt);
    CHECK_THROWS_AS(monte_carlo(cfg), error);
}

TEST_CASE("report serialization round-trips") {
    RunConfig cfg = base_config(50, 8);
    cfg.with_mapping = true;
    const MetricsReport rep = monte_carlo(cfg);

    ReportRow row;
    row.estimator = "wls";
    row.scenario = "hex6";
    row.rho = 0.25;
    row.na = 6;
    row.metrics = rep;

    const std::string jpath = "harness_report_test.json";
    emit_report_json({row}, jpath);
    const std::vector<ReportRow> back = read_report_json(jpath);
    std::remove(jpath.c_str());

    REQUIRE(back.size() == 1);
    CHECK(back[0].estimator == "wls");
    CHECK(back[0].scenario == "hex6");
    CHECK(back[0].rho == 0.25);
    CHECK(back[0].na == 6);
    CHECK(back[0].metrics.rmse_u == rep.rmse_u);
    CHECK(back[0].metrics.rmse_udot == rep.rmse_udot);
    CHECK(back[0].metrics.crlb_pos == rep.crlb_pos);
    CHECK(back[0].metrics.trials == rep.trials);
    CHECK(back[0].metrics.velocity_valid == rep.velocity_valid);
    REQUIRE(back[0].metrics.rmse_s.size() == rep.rmse_s.size());
    CHECK(back[0].metrics.rmse_s[0] == rep.rmse_s[0]);
    REQUIRE(back[0].metrics.mean_error.size() == rep.mean_error.size());
    CHECK((back[0].metrics.mean_error - rep.mean_error).cwiseAbs().maxCoeff() ==
          0.0);
}

TEST_CASE("csv report format is stable") {
    const std::string path = "harness_report_test.csv";
    emit_report_csv({}, path);
    std::string text = slurp(path);
    CHECK(text ==
          "estimator,scenario,rho,na,rmse_u,rmse_udot,crlb_pos,crlb_vel,"
          "t_per_estimate\n");

    RunConfig cfg = base_config(20, 8);
    const MetricsReport rep = monte_carlo(cfg);
    ReportRow row;
    row.estimator = "wls";
    row.scenario = "hex6";
    row.rho = 1.0;
    row.na = 6;
    row.metrics = rep;
    emit_report_csv({row, row}, path);
    text = slurp(path);
    std::remove(path.c_str());

    std::istringstream lines(text);
    std::string line;
    int n_lines = 0;
    while (std::getline(lines, line)) {
        int fields = 1;
        for (const char c : line) fields += (c == ',');
        CHECK(fields == 9);
        ++n_lines;
    }
    CHECK(n_lines == 3);
}

TEST_CASE("mapping stage fills per-receiver metrics and bounds") {
    RunConfig cfg = base_config(100, 17);
    cfg.with_mapping = true;
    cfg.noise.sigma_d = 0.1;
    cfg.noise.sigma_a = 0.01;
    const MetricsReport rep = monte_carlo(cfg);
    REQUIRE(rep.rmse_s.size() == 1);
    REQUIRE(rep.crlb_s.size() == 1);
    CHECK(rep.rmse_s[0] > 0.0);
    CHECK(rep.crlb_s[0] > 0.0);
    // Mapping uses fewer equations than the joint stage, so it is noisier.
    CHECK(rep.rmse_s[0] > rep.rmse_u);
}

TEST_CASE("timing medians are positive and repeatable") {
    const Scenario sc = scenario_preset("hex6");
    const NoiseModel noise = family_noise("D1", 21);
    const ResidualDataset ds = generate_residual_dataset(sc, noise, 6, 400);

    TrainOptions topts;
    topts.epochs = 10;
    topts.seed = 2;
    const TrainedNet net = train_residual_net(ds, topts);

    EnsembleOptions eopts;
    eopts.members = 3;
    eopts.spread_batch = 50;
    const TrainedEnsemble ens = train_ensemble(ds, topts, sc.rrhs, eopts);

    const BenchResult r1 = bench_timing(sc, noise, 6, net, ens, 5, 1000);
    CHECK(r1.repetitions >= 1000);
    CHECK(r1.t_wls > 0.0);
    CHECK(r1.t_wlsnet > 0.0);
    CHECK(r1.t_ewlsnet > 0.0);
    // A single weighted solve must not cost more than L of them plus
    // clustering.
    CHECK(r1.t_wlsnet < r1.t_ewlsnet);

    const BenchResult r2 = bench_timing(sc, noise, 6, net, ens, 5, 1000);
    const double rel =
        std::abs(r1.t_wls - r2.t_wls) / std::max(r1.t_wls, r2.t_wls);
    CHECK(rel < 0.35);  // medians are noisy but should be stable-ish
}
