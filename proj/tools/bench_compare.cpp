// Compares the OpenMP-parallel Monte Carlo driver against the serial
// reference implementation: wall-clock for each, plus a strict bit-identity
// check of every reduced metric.  Exits nonzero if the results differ.

#include <chrono>
#include <cstdint>
#include <cstring>
#include <iostream>
#include <string>
#include <vector>

#ifdef MMLOC_HAVE_OPENMP
#include <omp.h>
#endif

#include "mmloc/dataset.hpp"
#include "mmloc/harness.hpp"

namespace {

template <typename F>
double time_of(F&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

bool same_bits(double a, double b) {
    std::uint64_t ua = 0, ub = 0;
    std::memcpy(&ua, &a, sizeof a);
    std::memcpy(&ub, &b, sizeof b);
    return ua == ub;
}

int compare(const mmloc::MetricsReport& p, const mmloc::MetricsReport& s,
            const std::string& label) {
    int bad = 0;
    auto check = [&](double a, double b, const char* what) {
        if (!same_bits(a, b)) {
            std::cerr << label << ": " << what << " differs: " << a << " vs " << b
                      << "\n";
            ++bad;
        }
    };
    check(p.rmse_u, s.rmse_u, "rmse_u");
    check(p.rmse_udot, s.rmse_udot, "rmse_udot");
    if (p.rmse_s.size() != s.rmse_s.size()) {
        std::cerr << label << ": rmse_s length differs\n";
        ++bad;
    } else {
        for (std::size_t i = 0; i < p.rmse_s.size(); ++i) {
            check(p.rmse_s[i], s.rmse_s[i], "rmse_s[i]");
        }
    }
    if (p.mean_error.size() != s.mean_error.size()) {
        std::cerr << label << ": mean_error length differs\n";
        ++bad;
    } else {
        for (Eigen::Index i = 0; i < p.mean_error.size(); ++i) {
            check(p.mean_error(i), s.mean_error(i), "mean_error[i]");
        }
    }
    if (p.failures != s.failures) {
        std::cerr << label << ": failure counts differ\n";
        ++bad;
    }
    return bad;
}

}  // namespace

int main(int argc, char** argv) {
    int trials = 2000;
    if (argc > 1) trials = std::max(1, std::atoi(argv[1]));

    mmloc::RunConfig cfg;
    cfg.scenario = mmloc::scenario_preset("hex6");
    cfg.noise.kind = mmloc::NoiseModel::Kind::gaussian;
    cfg.noise.sigma_d = 0.4;
    cfg.noise.sigma_a = 0.001;
    cfg.trials = trials;
    cfg.na = 6;
    cfg.master_seed = 42;
    cfg.with_mapping = true;

#ifdef MMLOC_HAVE_OPENMP
    const int threads = omp_get_max_threads();
#else
    const int threads = 1;
#endif

    mmloc::MetricsReport par, ser;
    // Warm-up pass so neither timing pays first-touch costs.
    (void)mmloc::monte_carlo_serial(cfg);

    const double t_ser = time_of([&] { ser = mmloc::monte_carlo_serial(cfg); });
    const double t_par = time_of([&] { par = mmloc::monte_carlo(cfg); });

    std::cout << "trials:            " << trials << "\n";
    std::cout << "threads:           " << threads << "\n";
    std::cout << "serial reference:  " << t_ser << " s\n";
    std::cout << "parallel driver:   " << t_par << " s\n";
    std::cout << "speedup:           " << (t_par > 0.0 ? t_ser / t_par : 0.0)
              << "x\n";

    int bad = compare(par, ser, "joint run");

    // A learned-weighting configuration exercises the asset plumbing too.
    const mmloc::NoiseModel dnoise = mmloc::family_noise("D1", 7);
    const mmloc::ResidualDataset ds =
        mmloc::generate_residual_dataset(cfg.scenario, dnoise, 6, 800);
    mmloc::TrainOptions topts;
    topts.epochs = 15;
    topts.seed = 7;
    const mmloc::TrainedNet net = mmloc::train_residual_net(ds, topts);

    mmloc::RunConfig ncfg = cfg;
    ncfg.noise = dnoise;
    ncfg.estimator = mmloc::EstimatorKind::wlsnet;
    ncfg.trials = std::min(trials, 500);
    ncfg.with_mapping = false;
    mmloc::EstimatorAssets assets;
    assets.net = &net;

    mmloc::MetricsReport npar, nser;
    const double nt_ser = time_of([&] { nser = mmloc::monte_carlo_serial(ncfg, assets); });
    const double nt_par = time_of([&] { npar = mmloc::monte_carlo(ncfg, assets); });
    std::cout << "net-weighted serial:   " << nt_ser << " s\n";
    std::cout << "net-weighted parallel: " << nt_par << " s\n";
    bad += compare(npar, nser, "net-weighted run");

    if (bad != 0) {
        std::cerr << "FAIL: parallel and serial results are not bit-identical\n";
        return 1;
    }
    std::cout << "parallel and serial results are bit-identical\n";
    return 0;
}
