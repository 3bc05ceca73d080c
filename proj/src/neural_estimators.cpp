#include "mmloc/neural_estimators.hpp"

#include <cmath>

#include "mmloc/error.hpp"

namespace mmloc {

namespace {

double disturbance_for(const Eigen::VectorXd& ehat, const NetSolveOptions& opts) {
    const double mean_sq = ehat.squaredNorm() / static_cast<double>(ehat.size());
    return std::max(opts.a_relative * mean_sq, opts.a_floor);
}

// Solves (G^T W G) x = G^T W h with W = (e e^T + a I)^{-1} without forming W:
// by the rank-one inversion identity, W = (1/a) (I - e e^T / (a + e^T e)),
// and the common 1/a factor cancels in the solve.
Eigen::VectorXd projected_solve(const Eigen::MatrixXd& g, const Eigen::VectorXd& h,
                                const Eigen::VectorXd& ehat, double a) {
    const double denom = a + ehat.squaredNorm();
    const Eigen::VectorXd ge = g.transpose() * ehat;
    const Eigen::MatrixXd normal =
        g.transpose() * g - (ge * ge.transpose()) / denom;
    const Eigen::VectorXd rhs =
        g.transpose() * h - ge * (ehat.dot(h) / denom);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
    if (ldlt.info() != Eigen::Success) {
        throw error("singular_system", "net-weighted normal matrix is singular");
    }
    return ldlt.solve(rhs);
}

}  // namespace

TrainedNet train_residual_net(const ResidualDataset& ds, const TrainOptions& opts) {
    return train_net(ds.to_training_set(), opts);
}

TrainedNet train_fp_net(const ResidualDataset& ds, const TrainOptions& opts) {
    if (ds.samples.empty()) {
        throw error("bad_training_set", "dataset has no samples");
    }
    TrainingSet ts;
    const Eigen::Index n = static_cast<Eigen::Index>(ds.samples.size());
    ts.inputs.resize(ds.samples.front().m.size(), n);
    ts.targets.resize(6, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const ResidualSample& s = ds.samples[static_cast<std::size_t>(i)];
        ts.inputs.col(i) = s.m;
        ts.targets.col(i) << s.position, s.velocity;
    }
    return train_net(ts, opts);
}

TrainedNet train_mapping_net(const MappingResidualDataset& ds,
                             const TrainOptions& opts) {
    return train_net(ds.to_training_set(), opts);
}

JointEstimate wlsnet_estimate(const TrainedNet& net, const Eigen::VectorXd& m,
                              const std::vector<Vec3>& rrhs,
                              const NetSolveOptions& opts) {
    const DesignSystem sys = build_design(m, rrhs);
    const Eigen::VectorXd ehat = net_predict(net, m);
    if (ehat.size() != sys.h.size()) {
        throw error("bad_net_file", "network output does not match system size");
    }
    const double a = disturbance_for(ehat, opts);
    const Eigen::VectorXd x = projected_solve(sys.g, sys.h, ehat, a);

    JointEstimate est;
    est.position = Vec3(x(0), x(1), x(2));
    est.velocity = Vec3(x(3), x(4), x(5));
    est.velocity_valid = true;
    return est;
}

JointEstimate lsnet_estimate(const TrainedNet& net, const Eigen::VectorXd& m,
                             const std::vector<Vec3>& rrhs) {
    const DesignSystem sys = build_design(m, rrhs);
    const Eigen::VectorXd ehat = net_predict(net, m);
    if (ehat.size() != sys.h.size()) {
        throw error("bad_net_file", "network output does not match system size");
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(sys.g.transpose() * sys.g);
    if (ldlt.info() != Eigen::Success) {
        throw error("singular_system", "unweighted normal matrix is singular");
    }
    const Eigen::VectorXd x = ldlt.solve(sys.g.transpose() * (sys.h - ehat));

    JointEstimate est;
    est.position = Vec3(x(0), x(1), x(2));
    est.velocity = Vec3(x(3), x(4), x(5));
    est.velocity_valid = true;
    return est;
}

JointEstimate fp_estimate(const TrainedNet& net, const Eigen::VectorXd& m) {
    const Eigen::VectorXd x = net_predict(net, m);
    if (x.size() != 6) {
        throw error("bad_net_file", "state-regression network must output 6 values");
    }
    JointEstimate est;
    est.position = Vec3(x(0), x(1), x(2));
    est.velocity = Vec3(x(3), x(4), x(5));
    est.velocity_valid = true;
    return est;
}

ScattererEstimate scatterer_net_estimate(const TrainedNet& net,
                                         const MappingMeasurement& mm,
                                         const Vec3& user_pos,
                                         const std::vector<Vec3>& rrhs,
                                         const NetSolveOptions& opts) {
    const MappingSystem sys =
        build_mapping_system(mm.m_s, mm.rrh_index, user_pos, rrhs);
    const Eigen::VectorXd ehat = net_predict(net, mm.m_s);
    if (ehat.size() != 3) {
        throw error("bad_net_file", "mapping network must output 3 values");
    }
    const double a = disturbance_for(ehat, opts);
    const Eigen::VectorXd x = projected_solve(sys.g, sys.h, ehat, a);

    ScattererEstimate est;
    est.position = Vec3(x(0), x(1), x(2));
    est.rrh_index = mm.rrh_index;
    return est;
}

}  // namespace mmloc
