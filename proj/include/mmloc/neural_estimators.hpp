#pragma once

#include <Eigen/Dense>

#include "mmloc/dataset.hpp"
#include "mmloc/geometry.hpp"
#include "mmloc/mapping.hpp"
#include "mmloc/mlp.hpp"
#include "mmloc/wls.hpp"

namespace mmloc {

// Weighting used by the net-assisted solves: W = (e e^T + a I)^{-1} where e
// is the predicted equation-level error and a is a small disturbance keeping
// the matrix invertible, scaled relative to the prediction's mean square.
struct NetSolveOptions {
    double a_relative = 1e-6;
    double a_floor = 1e-12;
};

// Trains a net that predicts the equation-level error of the pseudo-linear
// system from the raw measurement vector.
TrainedNet train_residual_net(const ResidualDataset& ds, const TrainOptions& opts);

// Trains a direct-regression net mapping measurements to [u; udot]
// (fingerprinting-style baseline).
TrainedNet train_fp_net(const ResidualDataset& ds, const TrainOptions& opts);

// Trains a net predicting the mapping-stage equation errors from the
// reflection triple.
TrainedNet train_mapping_net(const MappingResidualDataset& ds,
                             const TrainOptions& opts);

// Single weighted solve with the learned error model; no re-weighting
// iterations.  Requires enough receivers for the full joint system.
JointEstimate wlsnet_estimate(const TrainedNet& net, const Eigen::VectorXd& m,
                              const std::vector<Vec3>& rrhs,
                              const NetSolveOptions& opts = {});

// Subtracts the predicted error and solves unweighted.
JointEstimate lsnet_estimate(const TrainedNet& net, const Eigen::VectorXd& m,
                             const std::vector<Vec3>& rrhs);

// Direct regression of the state from the measurement vector.
JointEstimate fp_estimate(const TrainedNet& net, const Eigen::VectorXd& m);

// Net-weighted single solve for the mapping stage.
ScattererEstimate scatterer_net_estimate(const TrainedNet& net,
                                         const MappingMeasurement& mm,
                                         const Vec3& user_pos,
                                         const std::vector<Vec3>& rrhs,
                                         const NetSolveOptions& opts = {});

}  // namespace mmloc
