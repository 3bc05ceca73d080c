#include "mmloc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "mmloc/error.hpp"
#include "mmloc/mapping.hpp"
#include "mmloc/rng.hpp"
#include "mmloc/wls.hpp"

namespace mmloc {

std::string estimator_name(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::wls: return "wls";
        case EstimatorKind::wlsnet: return "wlsnet";
        case EstimatorKind::lsnet: return "lsnet";
        case EstimatorKind::fp: return "fp";
        case EstimatorKind::ewlsnet: return "ewlsnet";
    }
    throw error("bad_config", "unknown estimator kind");
}

EstimatorKind estimator_from_name(const std::string& name) {
    if (name == "wls") return EstimatorKind::wls;
    if (name == "wlsnet") return EstimatorKind::wlsnet;
    if (name == "lsnet") return EstimatorKind::lsnet;
    if (name == "fp") return EstimatorKind::fp;
    if (name == "ewlsnet") return EstimatorKind::ewlsnet;
    throw error("bad_config", "unknown estimator: " + name);
}

namespace {

// Kahan-compensated accumulator.
struct Kahan {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v) {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

struct TrialSlot {
    bool ok = false;
    bool vel_ok = false;
    Vec3 pos_err = Vec3::Zero();
    Vec3 vel_err = Vec3::Zero();
    std::vector<double> s_err;
    double estimate_seconds = 0.0;
};

// Rows of the full measurement layout (receiver count N) that make up the
// sub-layout for na receivers, in sub-layout order.
std::vector<int> sublayout_rows(int n_full, int na) {
    std::vector<int> rows;
    rows.reserve(static_cast<std::size_t>(4 * na - 2));
    for (int n = 2; n <= na; ++n) {
        rows.push_back(2 * (n - 2));
        rows.push_back(2 * (n - 2) + 1);
    }
    for (int j = 1; j <= na; ++j) {
        rows.push_back(2 * (n_full - 1) + 2 * (j - 1));
        rows.push_back(2 * (n_full - 1) + 2 * (j - 1) + 1);
    }
    return rows;
}

struct TrialContext {
    const RunConfig* cfg = nullptr;
    const EstimatorAssets* assets = nullptr;
    Eigen::VectorXd clean_m_full;     // noise-free measurements, full layout
    Eigen::VectorXd gauss_sigma_full; // fluctuating / gaussian sigmas
    Eigen::VectorXd dom_sigma_full;   // dominant sigmas (zero when gaussian)
    std::vector<int> rows;            // sub-layout row indices
    Eigen::MatrixXd q_sub;            // gaussian-part covariance, sub-layout
    std::vector<int> mapped_rrhs;
};

TrialSlot run_one_trial(const TrialContext& ctx, int trial) {
    const RunConfig& cfg = *ctx.cfg;
    TrialSlot slot;
    std::mt19937_64 rng =
        child_rng(cfg.master_seed, static_cast<std::uint64_t>(trial));
    std::normal_distribution<double> gauss(0.0, 1.0);

    const int n_full_dim = static_cast<int>(ctx.clean_m_full.size());
    // Fixed draw order: dominant offset (full layout), then fluctuation
    // (full layout), then mapping triples.  Keeping the order independent of
    // na and of the mapping switch gives matched draws across runs.
    Eigen::VectorXd noisy_full = ctx.clean_m_full;
    if ((ctx.dom_sigma_full.array() != 0.0).any()) {
        for (int i = 0; i < n_full_dim; ++i) {
            noisy_full(i) += ctx.dom_sigma_full(i) * gauss(rng);
        }
    }
    for (int i = 0; i < n_full_dim; ++i) {
        noisy_full(i) += ctx.gauss_sigma_full(i) * gauss(rng);
    }

    MeasurementSet ms;
    ms.na = cfg.na;
    ms.m.resize(static_cast<Eigen::Index>(ctx.rows.size()));
    for (std::size_t i = 0; i < ctx.rows.size(); ++i) {
        ms.m(static_cast<Eigen::Index>(i)) =
            noisy_full(ctx.rows[i]);
    }
    ms.q = ctx.q_sub;

    JointEstimate est;
    try {
        const auto t0 = std::chrono::steady_clock::now();
        switch (cfg.estimator) {
            case EstimatorKind::wls:
                est = estimate_joint(ms, cfg.scenario.rrhs);
                break;
            case EstimatorKind::wlsnet:
                if (!ctx.assets->net) throw error("bad_config", "missing net");
                est = wlsnet_estimate(*ctx.assets->net, ms.m, cfg.scenario.rrhs);
                break;
            case EstimatorKind::lsnet:
                if (!ctx.assets->net) throw error("bad_config", "missing net");
                est = lsnet_estimate(*ctx.assets->net, ms.m, cfg.scenario.rrhs);
                break;
            case EstimatorKind::fp:
                if (!ctx.assets->net) throw error("bad_config", "missing net");
                est = fp_estimate(*ctx.assets->net, ms.m);
                break;
            case EstimatorKind::ewlsnet:
                if (!ctx.assets->ensemble) {
                    throw error("bad_config", "missing ensemble");
                }
                est = ewlsnet_estimate(*ctx.assets->ensemble, ms.m,
                                       cfg.scenario.rrhs);
                break;
        }
        if (cfg.measure_time) {
            slot.estimate_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
        }
    } catch (const std::exception&) {
        return slot;  // ok stays false
    }
    if (!est.position.allFinite() || (est.velocity_valid && !est.velocity.allFinite())) {
        return slot;
    }

    slot.ok = true;
    slot.vel_ok = est.velocity_valid;
    slot.pos_err = est.position - cfg.scenario.ue_pos;
    slot.vel_err = est.velocity_valid ? Vec3(est.velocity - cfg.scenario.ue_vel)
                                      : Vec3::Zero();

    if (cfg.with_mapping) {
        slot.s_err.reserve(ctx.mapped_rrhs.size());
        for (const int rrh : ctx.mapped_rrhs) {
            const NlosParams p = nlos_params(cfg.scenario, rrh);
            Eigen::Vector3d m_s(p.range_diff, p.azimuth, p.elevation);
            Eigen::Vector3d sig(cfg.noise.sigma_d, cfg.noise.sigma_a,
                                cfg.noise.sigma_a);
            Eigen::Vector3d dom = Eigen::Vector3d::Zero();
            Eigen::Vector3d fl = sig;
            if (cfg.noise.kind == NoiseModel::Kind::dominant_plus_fluctuating) {
                dom = sig;
                fl = Eigen::Vector3d(sig(0) * cfg.noise.fluctuating_ratio_tdoa,
                                     sig(1) * cfg.noise.fluctuating_ratio_aoa,
                                     sig(2) * cfg.noise.fluctuating_ratio_aoa);
                for (int i = 0; i < 3; ++i) m_s(i) += dom(i) * gauss(rng);
            }
            for (int i = 0; i < 3; ++i) m_s(i) += fl(i) * gauss(rng);

            MappingMeasurement mm;
            mm.rrh_index = rrh;
            mm.m_s = m_s;
            Eigen::Vector3d fl_w = fl;
            for (int i = 0; i < 3; ++i) {
                if (fl_w(i) <= 0.0) fl_w(i) = 1.0;
            }
            mm.q_s = fl_w.array().square().matrix().asDiagonal();
            try {
                const ScattererEstimate se =
                    estimate_scatterer(mm, est.position, cfg.scenario.rrhs);
                const Vec3& truth =
                    *cfg.scenario.scatterers[static_cast<std::size_t>(rrh - 1)];
                slot.s_err.push_back((se.position - truth).norm());
            } catch (const std::exception&) {
                slot.ok = false;
                return slot;
            }
        }
    }
    return slot;
}

MetricsReport reduce_slots(const RunConfig& cfg,
                           const std::vector<TrialSlot>& slots,
                           const TrialContext& ctx) {
    MetricsReport rep;
    rep.trials = cfg.trials;
    rep.mapped_rrhs = ctx.mapped_rrhs;

    Kahan pos_sq, vel_sq, time_acc;
    std::vector<Kahan> s_sq(ctx.mapped_rrhs.size());
    Kahan mean_err[6];
    int ok_count = 0, vel_count = 0;

    if (cfg.keep_trials) {
        rep.trial_pos_error.reserve(static_cast<std::size_t>(cfg.trials));
        rep.trial_vel_error.reserve(static_cast<std::size_t>(cfg.trials));
    }
    for (const TrialSlot& slot : slots) {
        if (!slot.ok) continue;
        ++ok_count;
        pos_sq.add(slot.pos_err.squaredNorm());
        for (int i = 0; i < 3; ++i) mean_err[i].add(slot.pos_err(i));
        if (slot.vel_ok) {
            ++vel_count;
            vel_sq.add(slot.vel_err.squaredNorm());
            for (int i = 0; i < 3; ++i) mean_err[3 + i].add(slot.vel_err(i));
        }
        for (std::size_t k = 0; k < slot.s_err.size(); ++k) {
            s_sq[k].add(slot.s_err[k] * slot.s_err[k]);
        }
        time_acc.add(slot.estimate_seconds);
        if (cfg.keep_trials) {
            rep.trial_pos_error.push_back(slot.pos_err.norm());
            if (slot.vel_ok) rep.trial_vel_error.push_back(slot.vel_err.norm());
        }
    }

    rep.failures = cfg.trials - ok_count;
    if (static_cast<double>(rep.failures) >
        cfg.max_failure_fraction * cfg.trials) {
        throw error("too_many_failures",
                    std::to_string(rep.failures) + " of " +
                        std::to_string(cfg.trials) + " trials failed");
    }
    if (ok_count == 0) throw error("too_many_failures", "no successful trials");

    rep.rmse_u = std::sqrt(pos_sq.sum / ok_count);
    rep.velocity_valid = vel_count > 0;
    rep.rmse_udot = rep.velocity_valid ? std::sqrt(vel_sq.sum / vel_count) : 0.0;
    rep.mean_error.resize(6);
    for (int i = 0; i < 3; ++i) {
        rep.mean_error(i) = mean_err[i].sum / ok_count;
    }
    for (int i = 3; i < 6; ++i) {
        rep.mean_error(i) = vel_count > 0 ? mean_err[i].sum / vel_count : 0.0;
    }
    for (std::size_t k = 0; k < s_sq.size(); ++k) {
        rep.rmse_s.push_back(std::sqrt(s_sq[k].sum / ok_count));
    }
    rep.wall_clock_per_estimate = cfg.measure_time ? time_acc.sum / ok_count : 0.0;

    const CrlbReport crlb = crlb_joint(cfg.scenario, cfg.noise, cfg.na);
    rep.crlb_pos = crlb.pos_bound;
    rep.crlb_vel = crlb.vel_bound;
    for (const int rrh : ctx.mapped_rrhs) {
        rep.crlb_s.push_back(crlb_scatterer(cfg.scenario, cfg.noise, rrh).pos_bound);
    }
    return rep;
}

MetricsReport run_monte_carlo(const RunConfig& cfg, const EstimatorAssets& assets,
                              bool parallel) {
    if (cfg.trials < 1) throw error("bad_config", "trials must be >= 1");
    if (cfg.rho <= 0.0) throw error("bad_config", "rho must be positive");
    const int n_full = static_cast<int>(cfg.scenario.n_rrhs());
    if (cfg.na < 2 || cfg.na > n_full) {
        throw error("bad_na", "receiver count out of range");
    }

    TrialContext ctx;
    ctx.cfg = &cfg;
    ctx.assets = &assets;
    {
        NoiseModel clean;
        clean.kind = NoiseModel::Kind::gaussian;
        clean.sigma_d = 0.0;
        clean.sigma_a = 0.0;
        ctx.clean_m_full = true_measurements(cfg.scenario, clean, n_full).m;
    }
    ctx.gauss_sigma_full = gaussian_sigmas(cfg.noise, n_full);
    ctx.dom_sigma_full = dominant_sigmas(cfg.noise, n_full);
    ctx.rows = sublayout_rows(n_full, cfg.na);

    // Weighting covariance for the solver; zero-noise slots get unit weight
    // so noise-free runs stay solvable (any W is exact on clean data).
    Eigen::VectorXd sig_sub = gaussian_sigmas(cfg.noise, cfg.na);
    for (int i = 0; i < sig_sub.size(); ++i) {
        if (sig_sub(i) <= 0.0) sig_sub(i) = 1.0;
    }
    ctx.q_sub = sig_sub.array().square().matrix().asDiagonal();

    if (cfg.with_mapping) {
        for (int n = 1; n <= cfg.na; ++n) {
            if (cfg.scenario.scatterers[static_cast<std::size_t>(n - 1)]) {
                ctx.mapped_rrhs.push_back(n);
            }
        }
        if (ctx.mapped_rrhs.empty()) {
            throw error("no_scatterer", "mapping requested but no scatterers");
        }
    }

    std::vector<TrialSlot> slots(static_cast<std::size_t>(cfg.trials));
    if (parallel) {
#ifdef MMLOC_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (int t = 0; t < cfg.trials; ++t) {
            slots[static_cast<std::size_t>(t)] = run_one_trial(ctx, t);
        }
    } else {
        for (int t = 0; t < cfg.trials; ++t) {
            slots[static_cast<std::size_t>(t)] = run_one_trial(ctx, t);
        }
    }
    return reduce_slots(cfg, slots, ctx);
}

}  // namespace

MetricsReport monte_carlo(const RunConfig& cfg, const EstimatorAssets& assets) {
    return run_monte_carlo(cfg, assets, /*parallel=*/true);
}

MetricsReport monte_carlo_serial(const RunConfig& cfg,
                                 const EstimatorAssets& assets) {
    return run_monte_carlo(cfg, assets, /*parallel=*/false);
}

BenchResult bench_timing(const Scenario& sc, const NoiseModel& noise, int na,
                         const TrainedNet& net, const TrainedEnsemble& ens,
                         std::uint64_t seed, int repetitions) {
    if (repetitions < 1000) repetitions = 1000;

    // One fixed noisy input shared by all estimators and repetitions.
    NoiseModel draw = noise;
    draw.seed = seed;
    const MeasurementSet ms = synthesize_measurements(sc, draw, na);

    volatile double sink = 0.0;  // keeps the solves from being optimized out
    auto median_of = [&](auto&& call) {
        std::vector<double> times(static_cast<std::size_t>(repetitions));
        for (int i = 0; i < repetitions; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            const JointEstimate est = call();
            const auto t1 = std::chrono::steady_clock::now();
            sink = sink + est.position.x();
            times[static_cast<std::size_t>(i)] =
                std::chrono::duration<double>(t1 - t0).count();
        }
        std::nth_element(times.begin(), times.begin() + repetitions / 2,
                         times.end());
        return times[static_cast<std::size_t>(repetitions / 2)];
    };

    BenchResult out;
    out.repetitions = repetitions;
    out.t_wls = median_of([&] { return estimate_joint(ms, sc.rrhs); });
    out.t_wlsnet = median_of([&] { return wlsnet_estimate(net, ms.m, sc.rrhs); });
    out.t_ewlsnet = median_of([&] { return ewlsnet_estimate(ens, ms.m, sc.rrhs); });
    return out;
}

}  // namespace mmloc
