// Acceptance harness: runs the eleven release criteria end to end and prints
// one verdict line per criterion with measured values and elapsed time.
// Detail lines (indented) precede each verdict.  The exit status is the
// number of failed criteria, so any red line makes the binary fail.
//
// Everything is keyed off one master seed fixed before any experiment was
// run; no per-criterion seed tuning.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mmloc/crlb.hpp"
#include "mmloc/dataset.hpp"
#include "mmloc/ensemble.hpp"
#include "mmloc/error.hpp"
#include "mmloc/geometry.hpp"
#include "mmloc/harness.hpp"
#include "mmloc/mapping.hpp"
#include "mmloc/mlp.hpp"
#include "mmloc/neural_estimators.hpp"
#include "mmloc/rng.hpp"
#include "mmloc/wls.hpp"

using namespace mmloc;

namespace {

constexpr std::uint64_t kMasterSeed = 42;

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

struct Criterion {
    bool ok = true;
    std::vector<std::string> details;
    std::string summary;

    void require(bool cond) { ok = ok && cond; }
    void detail(std::string s) { details.push_back(std::move(s)); }
};

int g_failures = 0;

template <typename Fn>
void run(int id, const char* name, double limit_s, Fn&& body) {
    Criterion c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.ok = false;
        c.detail(fmt("aborted: %s", e.what()));
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::string limit_note;
    if (limit_s > 0.0 && secs > limit_s) {
        c.ok = false;
        limit_note = fmt(" [over %.0f s limit]", limit_s);
    }
    for (const auto& d : c.details) std::printf("        %s\n", d.c_str());
    std::printf("[%s] %2d. %s: %s (%.2f s%s)\n", c.ok ? "PASS" : "FAIL", id,
                name, c.summary.c_str(), secs, limit_note.c_str());
    std::fflush(stdout);
    if (!c.ok) ++g_failures;
}

// Random but non-degenerate constellation: receivers on the ground plane,
// user well away from all of them (same distribution as the unit tests).
Scenario random_scenario(std::mt19937_64& rng, int n_rrhs) {
    std::uniform_real_distribution<double> ground(-500.0, 500.0);
    std::uniform_real_distribution<double> depth(-150.0, -30.0);
    std::uniform_real_distribution<double> span(-300.0, 300.0);
    std::uniform_real_distribution<double> vel(-10.0, 10.0);
    for (;;) {
        Scenario sc;
        for (int i = 0; i < n_rrhs; ++i)
            sc.rrhs.push_back(Vec3(ground(rng), ground(rng), 0.0));
        sc.ue_pos = Vec3(span(rng), span(rng), depth(rng));
        sc.ue_vel = Vec3(vel(rng), vel(rng), vel(rng));
        sc.scatterers.assign(static_cast<std::size_t>(n_rrhs), std::nullopt);
        bool ok = true;
        for (int n = 1; n <= n_rrhs && ok; ++n) {
            if (los_range(sc, n) < 30.0) ok = false;
            const AoaPair aoa = aoa_pair(sc.rrhs[n - 1], sc.ue_pos);
            if (std::cos(aoa.elevation) < 0.05) ok = false;
        }
        if (ok) return sc;
    }
}

Eigen::MatrixXd jacobian_fd(const Scenario& sc, int na) {
    NoiseModel clean;
    const int dim = 4 * na - 2;
    Eigen::MatrixXd j(dim, 6);
    const double h = 1e-4;
    for (int k = 0; k < 6; ++k) {
        Scenario plus = sc, minus = sc;
        if (k < 3) {
            plus.ue_pos(k) += h;
            minus.ue_pos(k) -= h;
        } else {
            plus.ue_vel(k - 3) += h;
            minus.ue_vel(k - 3) -= h;
        }
        j.col(k) = (true_measurements(plus, clean, na).m -
                    true_measurements(minus, clean, na).m) /
                   (2.0 * h);
    }
    return j;
}

// ---- neural experiment plumbing -----------------------------------------

struct FamilyEval {
    double wls = 0.0;
    double wlsnet = 0.0;
    double lsnet = 0.0;
    double ewlsnet = 0.0;
    double fp = 0.0;
    int solver_failures = 0;
};

struct Accum {
    double se = 0.0;
    int n = 0;
    void add(const Vec3& est, const Vec3& truth) {
        se += (est - truth).squaredNorm();
        ++n;
    }
    double rmse() const { return n > 0 ? std::sqrt(se / n) : 0.0; }
};

constexpr int kDatasetSize = 18500;
constexpr int kTrainSize = 16000;  // last 2500 samples are held out for test

TrainOptions accept_train_options() {
    TrainOptions t;
    t.epochs = 300;
    t.seed = kMasterSeed;
    return t;
}

ResidualDataset family_dataset(const Scenario& sc, const NoiseModel& noise) {
    return generate_residual_dataset(sc, noise, 6, kDatasetSize);
}

ResidualDataset train_slice(const ResidualDataset& ds) {
    ResidualDataset tr = ds;
    tr.samples.resize(kTrainSize);
    return tr;
}

// Position RMSE of each requested estimator over the held-out slice.
FamilyEval evaluate_family(const ResidualDataset& ds, const NoiseModel& noise,
                           const Scenario& sc, const TrainedNet* net,
                           const TrainedEnsemble* ens, bool want_lsnet,
                           bool want_fp) {
    const Eigen::VectorXd sig = gaussian_sigmas(noise, 6);
    const Eigen::MatrixXd q =
        sig.array().square().matrix().asDiagonal().toDenseMatrix();
    Accum a_wls, a_wlsnet, a_lsnet, a_ewlsnet, a_fp;
    FamilyEval ev;
    for (int i = kTrainSize; i < static_cast<int>(ds.samples.size()); ++i) {
        const ResidualSample& s = ds.samples[static_cast<std::size_t>(i)];
        MeasurementSet ms;
        ms.na = 6;
        ms.m = s.m;
        ms.q = q;
        try {
            a_wls.add(estimate_joint(ms, sc.rrhs).position, s.position);
        } catch (const error&) {
            ++ev.solver_failures;
        }
        if (net != nullptr) {
            if (want_fp) {
                // A direct-regression net outputs the state itself and must
                // not be fed to the residual-based solvers.
                a_fp.add(fp_estimate(*net, s.m).position, s.position);
            } else {
                a_wlsnet.add(wlsnet_estimate(*net, s.m, sc.rrhs).position,
                             s.position);
                if (want_lsnet)
                    a_lsnet.add(lsnet_estimate(*net, s.m, sc.rrhs).position,
                                s.position);
            }
        }
        if (ens != nullptr)
            a_ewlsnet.add(ewlsnet_estimate(*ens, s.m, sc.rrhs).position,
                          s.position);
    }
    ev.wls = a_wls.rmse();
    ev.wlsnet = a_wlsnet.rmse();
    ev.lsnet = a_lsnet.rmse();
    ev.ewlsnet = a_ewlsnet.rmse();
    ev.fp = a_fp.rmse();
    return ev;
}

// Kept alive after criterion 7 so the timing criterion measures the same
// trained models it validated.
TrainedEnsemble g_d1_ensemble;
bool g_d1_ready = false;

}  // namespace

int main() {
    std::printf("acceptance run: master seed %llu, %d-sample datasets "
                "(%d train / %d test)\n",
                static_cast<unsigned long long>(kMasterSeed), kDatasetSize,
                kTrainSize, kDatasetSize - kTrainSize);

    const Scenario hex = scenario_preset("hex6");

    // 1 — zero measurement noise must reproduce the exact user state and
    // scatterer position through the full pipeline.
    run(1, "noiseless consistency", 1.0, [&](Criterion& c) {
        RunConfig cfg;
        cfg.scenario = hex;
        cfg.noise = NoiseModel{};  // zero sigmas
        cfg.trials = 8;
        cfg.na = 6;
        cfg.master_seed = kMasterSeed;
        cfg.with_mapping = true;
        const MetricsReport rep = monte_carlo(cfg);
        double worst_s = 0.0;
        for (double v : rep.rmse_s) worst_s = std::max(worst_s, v);
        c.require(rep.failures == 0);
        c.require(rep.velocity_valid);
        c.require(rep.rmse_u < 1e-6);
        c.require(rep.rmse_udot < 1e-6);
        c.require(!rep.rmse_s.empty() && worst_s < 1e-6);
        c.summary = fmt("pos %.2e m, vel %.2e m/s, scatterer %.2e m (all < 1e-6)",
                        rep.rmse_u, rep.rmse_udot, worst_s);
    });

    // 2 — the equation-error linearization must map exactly onto the design
    // matrix through the measurement Jacobian: B * B1 = G.
    run(2, "efficiency identity B*B1 = G", 10.0, [&](Criterion& c) {
        std::mt19937_64 rng = child_rng(kMasterSeed, 2001);
        std::uniform_int_distribution<int> n_rrhs(4, 8);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const int n = n_rrhs(rng);
            const Scenario sc = random_scenario(rng, n);
            worst = std::max(worst, efficiency_identity_gap(sc, n));
        }
        c.require(worst < 1e-8);
        c.summary = fmt("max |B*B1 - G| = %.2e over 1000 geometries (< 1e-8)",
                        worst);
    });

    // 3 — the re-weighted solve must attain the lower bound at small noise.
    run(3, "bound attainment at small noise", 120.0, [&](Criterion& c) {
        std::string parts;
        for (double rho : {1e-3, 1e-2}) {
            RunConfig cfg;
            cfg.scenario = hex;
            cfg.noise.sigma_d = 40.0 * rho;
            cfg.noise.sigma_a = 0.1 * rho;
            cfg.trials = 1000;
            cfg.na = 6;
            cfg.rho = rho;
            cfg.master_seed = kMasterSeed;
            const MetricsReport rep = monte_carlo(cfg);
            const double rp = rep.rmse_u / rep.crlb_pos;
            const double rv = rep.rmse_udot / rep.crlb_vel;
            c.require(rp >= 0.95 && rp <= 1.10);
            c.require(rv >= 0.95 && rv <= 1.10);
            c.detail(fmt("rho %.0e: RMSE/bound pos %.3f, vel %.3f "
                         "(need 0.95..1.10)",
                         rho, rp, rv));
            parts += fmt("%s%.3f/%.3f", parts.empty() ? "" : ", ", rp, rv);
        }
        c.summary = "pos/vel ratios " + parts;
    });

    // 4 — decimeter-level targets at sigma_d = 0.1 m, sigma_a = 0.01 rad.
    // The position target is below the estimator-independent lower bound at
    // this noise, so that subclause cannot pass; bounds are printed beside
    // each measurement and the verdict reflects the honest outcome.
    run(4, "decimeter accuracy targets", 60.0, [&](Criterion& c) {
        NoiseModel noise;
        noise.sigma_d = 0.1;
        noise.sigma_a = 0.01;
        double vel_worst = 0.0;
        double pos6 = 0.0, bound6 = 0.0;
        for (int na : {4, 5, 6}) {
            RunConfig cfg;
            cfg.scenario = hex;
            cfg.noise = noise;
            cfg.trials = 1000;
            cfg.na = na;
            cfg.master_seed = kMasterSeed;
            const MetricsReport rep = monte_carlo(cfg);
            if (na == 6) {
                pos6 = rep.rmse_u;
                bound6 = rep.crlb_pos;
            }
            vel_worst = std::max(vel_worst, rep.rmse_udot);
            c.detail(fmt("na=%d: RMSE pos %.3f m (bound %.3f), vel %.3f m/s "
                         "(bound %.3f)",
                         na, rep.rmse_u, rep.crlb_pos, rep.rmse_udot,
                         rep.crlb_vel));
        }
        c.require(pos6 < 0.1);
        c.require(vel_worst < 0.1);
        c.summary = fmt("pos %.3f m (target <0.1, bound %.3f), worst vel "
                        "%.3f m/s (target <0.1)",
                        pos6, bound6, vel_worst);
    });

    // 5 — with matched noise draws, adding receivers never hurts.
    run(5, "error nonincreasing in receiver count", 0.0, [&](Criterion& c) {
        NoiseModel noise;
        noise.sigma_d = 0.4;
        noise.sigma_a = 1e-3;
        std::vector<double> pos, vel;
        std::string seq;
        for (int na = 2; na <= 6; ++na) {
            RunConfig cfg;
            cfg.scenario = hex;
            cfg.noise = noise;
            cfg.trials = 1000;
            cfg.na = na;
            cfg.master_seed = kMasterSeed;
            const MetricsReport rep = monte_carlo(cfg);
            pos.push_back(rep.rmse_u);
            if (rep.velocity_valid) vel.push_back(rep.rmse_udot);
            seq += fmt("%s%.3f", na == 2 ? "" : " >= ", rep.rmse_u);
        }
        for (std::size_t i = 1; i < pos.size(); ++i)
            c.require(pos[i] <= pos[i - 1]);
        for (std::size_t i = 1; i < vel.size(); ++i)
            c.require(vel[i] <= vel[i - 1]);
        c.detail(fmt("vel (na=4..6): %.4f >= %.4f >= %.4f m/s", vel[0], vel[1],
                     vel[2]));
        c.summary = "pos RMSE " + seq + " m across na=2..6";
    });

    // 6 — the reflection stage must attain its own bound for noise scale
    // factors at and below +5 dB (power convention rho = 10^(dB/10)).
    run(6, "scatterer bound attainment", 120.0, [&](Criterion& c) {
        std::string parts;
        for (double db : {-5.0, 0.0, 5.0}) {
            const double rho = std::pow(10.0, db / 10.0);
            RunConfig cfg;
            cfg.scenario = hex;
            cfg.noise.sigma_d = 0.1 * rho;
            cfg.noise.sigma_a = 0.01 * rho;
            cfg.trials = 1000;
            cfg.na = 6;
            cfg.rho = rho;
            cfg.master_seed = kMasterSeed;
            cfg.with_mapping = true;
            const MetricsReport rep = monte_carlo(cfg);
            const double ratio = rep.rmse_s.at(0) / rep.crlb_s.at(0);
            c.require(ratio >= 0.95 && ratio <= 1.15);
            c.detail(fmt("%+.0f dB: RMSE %.3f m, bound %.3f m, ratio %.3f "
                         "(need 0.95..1.15)",
                         db, rep.rmse_s.at(0), rep.crlb_s.at(0), ratio));
            parts += fmt("%s%.3f", parts.empty() ? "" : ", ", ratio);
        }
        c.summary = "RMSE/bound ratios " + parts + " at -5/0/+5 dB";
    });

    // 7 — orderings on the dominant-plus-fluctuating families.  Fresh
    // datasets; one shared offset per dataset (train and test observe the
    // same fixed error pattern, matching how such data is collected).
    run(7, "learned-estimator orderings, offset families", 1800.0,
        [&](Criterion& c) {
            const TrainOptions topts = accept_train_options();
            // D0: the single residual net serves both assisted solvers.
            {
                const NoiseModel noise = family_noise("D0", kMasterSeed);
                const ResidualDataset ds = family_dataset(hex, noise);
                const TrainedNet net =
                    train_residual_net(train_slice(ds), topts);
                const FamilyEval ev = evaluate_family(ds, noise, hex, &net,
                                                      nullptr, true, false);
                c.require(ev.lsnet <= ev.wlsnet);
                c.detail(fmt("D0: wls %.4f, wlsnet %.4f, lsnet %.4f m "
                             "(need lsnet <= wlsnet)%s",
                             ev.wls, ev.wlsnet, ev.lsnet,
                             ev.lsnet <= ev.wlsnet ? "" : " VIOLATED"));
            }
            int ordering_hits = 0;
            for (const char* name : {"D1", "D2", "D3", "D4"}) {
                const NoiseModel noise = family_noise(name, kMasterSeed);
                const ResidualDataset ds = family_dataset(hex, noise);
                EnsembleOptions eopts;  // 10 members; member 0 is the net
                const TrainedEnsemble ens =
                    train_ensemble(train_slice(ds), topts, hex.rrhs, eopts);
                const FamilyEval ev = evaluate_family(
                    ds, noise, hex, &ens.members.front(), &ens, false, false);
                const bool net_beats_wls = ev.wlsnet < ev.wls;
                const bool ens_holds = ev.ewlsnet <= ev.wlsnet;
                c.require(net_beats_wls);
                c.require(ens_holds);
                ordering_hits += net_beats_wls + ens_holds;
                c.detail(fmt("%s: wls %.4f, wlsnet %.4f, ewlsnet %.4f m "
                             "(need wlsnet < wls, ewlsnet <= wlsnet)%s",
                             name, ev.wls, ev.wlsnet, ev.ewlsnet,
                             net_beats_wls && ens_holds ? "" : " VIOLATED"));
                if (std::string(name) == "D1") {
                    g_d1_ensemble = ens;
                    g_d1_ready = true;
                }
            }
            c.summary = fmt("%d/8 offset-family orderings hold, plus the D0 "
                            "subclause above; 2500 test samples each",
                            ordering_hits);
        });

    // 8 — on pure Gaussian noise the plain weighted solve must win, and the
    // direct-regression baseline must trail it on the P1 family.
    run(8, "learned-estimator orderings, Gaussian / regression", 0.0,
        [&](Criterion& c) {
            const TrainOptions topts = accept_train_options();
            {
                const NoiseModel noise = family_noise("P4", kMasterSeed);
                const ResidualDataset ds = family_dataset(hex, noise);
                const TrainedNet net =
                    train_residual_net(train_slice(ds), topts);
                const FamilyEval ev = evaluate_family(ds, noise, hex, &net,
                                                      nullptr, false, false);
                c.require(ev.wls < ev.wlsnet);
                c.detail(fmt("P4: wls %.4f, wlsnet %.4f m (need wls < wlsnet)",
                             ev.wls, ev.wlsnet));
            }
            {
                const NoiseModel noise = family_noise("P1", kMasterSeed);
                const ResidualDataset ds = family_dataset(hex, noise);
                const TrainedNet net = train_fp_net(train_slice(ds), topts);
                FamilyEval ev;
                {
                    // fp_estimate needs no solver; reuse the shared loop.
                    ev = evaluate_family(ds, noise, hex, &net, nullptr, false,
                                         true);
                }
                c.require(ev.fp > ev.wls);
                c.detail(fmt("P1: wls %.4f, fp %.4f m (need fp > wls)", ev.wls,
                             ev.fp));
            }
            c.summary = "plain weighted solve wins on Gaussian noise; "
                        "direct regression trails on P1";
        });

    // 9 — per-estimate latency ordering on identical inputs, using the D1
    // models validated in criterion 7.
    run(9, "latency ordering", 0.0, [&](Criterion& c) {
        if (!g_d1_ready)
            throw error("internal", "criterion 7 did not produce D1 models");
        const NoiseModel noise = family_noise("D1", kMasterSeed);
        const BenchResult b =
            bench_timing(hex, noise, 6, g_d1_ensemble.members.front(),
                         g_d1_ensemble, kMasterSeed, 2000);
        c.require(b.t_wlsnet < b.t_wls);
        c.require(b.t_wlsnet < b.t_ewlsnet);
        c.summary = fmt("median wls %.1f us, wlsnet %.1f us, ewlsnet %.1f us "
                        "(wlsnet fastest of the three)",
                        1e6 * b.t_wls, 1e6 * b.t_wlsnet, 1e6 * b.t_ewlsnet);
    });

    // 10 — analytic gradients against central differences across random
    // network shapes, parameters, and batches.
    run(10, "gradient oracle", 10.0, [&](Criterion& c) {
        std::mt19937_64 rng = child_rng(kMasterSeed, 10001);
        std::uniform_real_distribution<double> w(-1.0, 1.0);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        std::uniform_int_distribution<int> in_d(2, 6), out_d(1, 4);
        std::uniform_int_distribution<int> layers(1, 2), width(3, 8);
        std::uniform_int_distribution<int> batch_d(1, 6);
        double worst = 0.0;
        for (int t = 0; t < 50; ++t) {
            std::vector<int> dims{in_d(rng)};
            const int hidden_layers = layers(rng);
            for (int l = 0; l < hidden_layers; ++l) dims.push_back(width(rng));
            dims.push_back(out_d(rng));
            MlpParams p;
            for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
                Eigen::MatrixXd wm(dims[l + 1], dims[l]);
                Eigen::VectorXd bv(dims[l + 1]);
                for (int i = 0; i < wm.size(); ++i) wm.data()[i] = w(rng);
                for (int i = 0; i < bv.size(); ++i) bv(i) = w(rng);
                p.weights.push_back(wm);
                p.biases.push_back(bv);
            }
            const int batch = batch_d(rng);
            Eigen::MatrixXd x(dims.front(), batch), y(dims.back(), batch);
            for (int i = 0; i < x.size(); ++i) x.data()[i] = u01(rng);
            for (int i = 0; i < y.size(); ++i) y.data()[i] = u01(rng);

            std::vector<Eigen::MatrixXd> gw;
            std::vector<Eigen::VectorXd> gb;
            mlp_loss_and_gradients(p, x, y, &gw, &gb);
            const double step = 1e-6;
            auto probe = [&](double* slot, double analytic) {
                const double keep = *slot;
                *slot = keep + step;
                const double up = mlp_loss_and_gradients(p, x, y, nullptr,
                                                         nullptr);
                *slot = keep - step;
                const double dn = mlp_loss_and_gradients(p, x, y, nullptr,
                                                         nullptr);
                *slot = keep;
                const double numeric = (up - dn) / (2.0 * step);
                const double scale =
                    std::max({std::abs(numeric), std::abs(analytic), 1e-8});
                worst = std::max(worst, std::abs(numeric - analytic) / scale);
            };
            for (std::size_t l = 0; l < p.weights.size(); ++l) {
                for (int i = 0; i < p.weights[l].rows(); ++i) {
                    for (int j = 0; j < p.weights[l].cols(); ++j)
                        probe(&p.weights[l](i, j), gw[l](i, j));
                    probe(&p.biases[l](i), gb[l](i));
                }
            }
        }
        c.require(worst < 1e-4);
        c.summary = fmt("max relative gradient error %.2e over 50 "
                        "configurations (< 1e-4)",
                        worst);
    });

    // 11 — analytic measurement Jacobian against central differences.
    run(11, "measurement Jacobian oracle", 0.0, [&](Criterion& c) {
        std::mt19937_64 rng = child_rng(kMasterSeed, 11001);
        std::uniform_int_distribution<int> n_rrhs(4, 8);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const int n = n_rrhs(rng);
            const Scenario sc = random_scenario(rng, n);
            const Eigen::MatrixXd gap =
                jacobian_measurements(sc, n) - jacobian_fd(sc, n);
            worst = std::max(worst, gap.cwiseAbs().maxCoeff());
        }
        c.require(worst < 1e-6);
        c.summary = fmt("max abs Jacobian error %.2e over 100 geometries "
                        "(< 1e-6)",
                        worst);
    });

    std::printf("%d of 11 criteria passed\n", 11 - g_failures);
    return g_failures;
}
