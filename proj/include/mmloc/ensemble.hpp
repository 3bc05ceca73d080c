#pragma once

#include <cstdint>
#include <vector>

#include "mmloc/dataset.hpp"
#include "mmloc/mlp.hpp"
#include "mmloc/neural_estimators.hpp"

namespace mmloc {

// Density-based selection of representative points.  Density of point i is
// sum_j exp(-||p_i - p_j||^2 / (ra/2)^2); the densest point is selected,
// densities are reduced around it with radius rb, and the process repeats.
// Ties break toward the lowest index.  Returns `centers` indices into
// `points` (selected points are always members of the input set).
std::vector<int> subtractive_cluster_select(const std::vector<Vec3>& points,
                                            double ra, double rb, int centers);

struct EnsembleOptions {
    int members = 10;
    double radius_scale = 4.0;   // ra = scale * member spread on validation
    double rb_over_ra = 1.5;
    int spread_batch = 200;      // validation samples used to size ra
};

// A bag of identically-trained error nets differing only in initialization
// and batch order.  Member 0 doubles as the plain single-net estimator.
struct TrainedEnsemble {
    std::vector<TrainedNet> members;
    double ra_position = 1.0;
    double ra_velocity = 1.0;
};

// Trains `members` nets on the same dataset with per-member seeds, then sizes
// the clustering radii from the spread of member predictions on the first
// `spread_batch` samples.  Training of members runs in parallel when OpenMP
// is available; results do not depend on the thread count.
TrainedEnsemble train_ensemble(const ResidualDataset& ds,
                               const TrainOptions& base_opts,
                               const std::vector<Vec3>& rrhs,
                               const EnsembleOptions& opts = {});

// Runs every member's weighted solve, then picks the densest position and
// velocity among the member outputs by subtractive clustering.  The output
// is always one of the member predictions (per component block).
JointEstimate ewlsnet_estimate(const TrainedEnsemble& ens,
                               const Eigen::VectorXd& m,
                               const std::vector<Vec3>& rrhs,
                               const EnsembleOptions& opts = {},
                               const NetSolveOptions& solve_opts = {});

}  // namespace mmloc
