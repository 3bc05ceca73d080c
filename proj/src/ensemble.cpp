#include "mmloc/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "mmloc/error.hpp"

#ifdef MMLOC_HAVE_OPENMP
#include <omp.h>
#endif

namespace mmloc {

std::vector<int> subtractive_cluster_select(const std::vector<Vec3>& points,
                                            double ra, double rb, int centers) {
    if (points.empty()) throw error("bad_config", "no points to cluster");
    if (centers < 1 || centers > static_cast<int>(points.size())) {
        throw error("bad_config", "center count out of range");
    }
    const double ra_eff = std::max(ra, 1e-12);
    const double rb_eff = std::max(rb, 1e-12);
    const double inv_ra2 = 1.0 / ((ra_eff / 2.0) * (ra_eff / 2.0));
    const double inv_rb2 = 1.0 / ((rb_eff / 2.0) * (rb_eff / 2.0));

    const int n = static_cast<int>(points.size());
    std::vector<double> density(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double d2 =
                (points[static_cast<std::size_t>(i)] -
                 points[static_cast<std::size_t>(j)]).squaredNorm();
            density[static_cast<std::size_t>(i)] += std::exp(-d2 * inv_ra2);
        }
    }

    std::vector<int> selected;
    std::vector<char> taken(static_cast<std::size_t>(n), 0);
    selected.reserve(static_cast<std::size_t>(centers));
    for (int k = 0; k < centers; ++k) {
        int best = -1;
        for (int i = 0; i < n; ++i) {
            if (taken[static_cast<std::size_t>(i)]) continue;
            if (best < 0 || density[static_cast<std::size_t>(i)] >
                                density[static_cast<std::size_t>(best)]) {
                best = i;
            }
        }
        selected.push_back(best);
        taken[static_cast<std::size_t>(best)] = 1;
        const double peak = density[static_cast<std::size_t>(best)];
        for (int i = 0; i < n; ++i) {
            const double d2 =
                (points[static_cast<std::size_t>(i)] -
                 points[static_cast<std::size_t>(best)]).squaredNorm();
            density[static_cast<std::size_t>(i)] -= peak * std::exp(-d2 * inv_rb2);
        }
    }
    return selected;
}

TrainedEnsemble train_ensemble(const ResidualDataset& ds,
                               const TrainOptions& base_opts,
                               const std::vector<Vec3>& rrhs,
                               const EnsembleOptions& opts) {
    if (opts.members < 1) throw error("bad_config", "ensemble needs >= 1 member");

    TrainedEnsemble ens;
    ens.members.resize(static_cast<std::size_t>(opts.members));

    // Each member gets its own seed stream; the dataset is shared.
    std::vector<TrainOptions> member_opts(static_cast<std::size_t>(opts.members),
                                          base_opts);
    for (int i = 0; i < opts.members; ++i) {
        member_opts[static_cast<std::size_t>(i)].seed =
            base_opts.seed * 1000003ull + static_cast<std::uint64_t>(i);
    }

#ifdef MMLOC_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int i = 0; i < opts.members; ++i) {
        ens.members[static_cast<std::size_t>(i)] =
            train_residual_net(ds, member_opts[static_cast<std::size_t>(i)]);
    }

    // Size the clustering radii from the spread of member predictions.
    const int batch = std::min<int>(opts.spread_batch,
                                    static_cast<int>(ds.samples.size()));
    double acc_pos = 0.0, acc_vel = 0.0;
    long long count = 0;
    for (int s = 0; s < batch; ++s) {
        const ResidualSample& sample = ds.samples[static_cast<std::size_t>(s)];
        std::vector<Vec3> us, vs;
        us.reserve(static_cast<std::size_t>(opts.members));
        vs.reserve(static_cast<std::size_t>(opts.members));
        bool ok = true;
        for (const TrainedNet& net : ens.members) {
            try {
                const JointEstimate est = wlsnet_estimate(net, sample.m, rrhs);
                us.push_back(est.position);
                vs.push_back(est.velocity);
            } catch (const error&) {
                ok = false;
                break;
            }
        }
        if (!ok || us.empty()) continue;
        Vec3 mu = Vec3::Zero(), mv = Vec3::Zero();
        for (const Vec3& p : us) mu += p;
        for (const Vec3& p : vs) mv += p;
        mu /= static_cast<double>(us.size());
        mv /= static_cast<double>(vs.size());
        for (const Vec3& p : us) acc_pos += (p - mu).squaredNorm();
        for (const Vec3& p : vs) acc_vel += (p - mv).squaredNorm();
        count += static_cast<long long>(us.size());
    }
    if (count > 0) {
        // Root-mean-square 3-D distance of members about their mean.
        ens.ra_position = std::max(
            opts.radius_scale * std::sqrt(acc_pos / static_cast<double>(count)),
            1e-12);
        ens.ra_velocity = std::max(
            opts.radius_scale * std::sqrt(acc_vel / static_cast<double>(count)),
            1e-12);
    }
    return ens;
}

JointEstimate ewlsnet_estimate(const TrainedEnsemble& ens,
                               const Eigen::VectorXd& m,
                               const std::vector<Vec3>& rrhs,
                               const EnsembleOptions& opts,
                               const NetSolveOptions& solve_opts) {
    if (ens.members.empty()) throw error("bad_config", "empty ensemble");

    std::vector<Vec3> us, vs;
    us.reserve(ens.members.size());
    vs.reserve(ens.members.size());
    for (const TrainedNet& net : ens.members) {
        const JointEstimate est = wlsnet_estimate(net, m, rrhs, solve_opts);
        us.push_back(est.position);
        vs.push_back(est.velocity);
    }

    const int iu = subtractive_cluster_select(
        us, ens.ra_position, opts.rb_over_ra * ens.ra_position, 1)[0];
    const int iv = subtractive_cluster_select(
        vs, ens.ra_velocity, opts.rb_over_ra * ens.ra_velocity, 1)[0];

    JointEstimate est;
    est.position = us[static_cast<std::size_t>(iu)];
    est.velocity = vs[static_cast<std::size_t>(iv)];
    est.velocity_valid = true;
    return est;
}

}  // namespace mmloc
