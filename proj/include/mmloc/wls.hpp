#pragma once

#include <Eigen/Dense>

#include "mmloc/geometry.hpp"

namespace mmloc {

// Pseudo-linear system h = G * x for the joint position/velocity problem.
// The unknown is x = [u; udot] (6 entries).  Rows are ordered as
// range-difference / rate-difference pairs for receivers 2..Na followed by
// azimuth / elevation pairs for receivers 1..Na, matching the measurement
// vector layout.
struct DesignSystem {
    Eigen::VectorXd h;  // (4*Na - 2)
    Eigen::MatrixXd g;  // (4*Na - 2) x 6
};

// Linear map from measurement perturbations to equation-error perturbations,
// evaluated at a given state: e ~= B * dm for small noise.  Used to re-weight
// the solve as W = (B Q B^T)^{-1}.
using LinearizationB = Eigen::MatrixXd;

struct JointEstimate {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    bool velocity_valid = false;  // false when too few receivers to observe it
    int iterations = 0;           // re-weighting passes actually performed
    double condition = 0.0;       // condition estimate of the last normal matrix
};

// Builds the pseudo-linear system from a measurement vector (layout as in
// MeasurementSet) and the receiver positions.
DesignSystem build_design(const Eigen::VectorXd& m,
                          const std::vector<Vec3>& rrhs);

// Equation-error linearization at state (u, udot); all entries derive from
// the state and receiver geometry.  Square, same row order as DesignSystem.
LinearizationB build_linearization(const std::vector<Vec3>& rrhs, int na,
                                   const Vec3& u, const Vec3& udot);

// One weighted least-squares solve: x = (G^T W G)^{-1} G^T W h.
// Throws error("singular_system") if the normal matrix is not usable.
Eigen::VectorXd wls_solve(const DesignSystem& sys, const Eigen::MatrixXd& w,
                          double* condition_out = nullptr);

struct EstimatorOptions {
    int reweight_iterations = 5;   // extra passes after the W = Q^{-1} init
    double convergence_tol = 1e-9; // early exit on step size
    double max_condition = 1e12;   // fall back to previous W above this
};

// Closed-form joint estimate with iterative re-weighting.  Starts from
// W = Q^{-1}, then repeatedly rebuilds the equation-error covariance at the
// current state.  With fewer than four receivers the velocity block of the
// pseudo-linear system is rank deficient, so the solver switches to a
// position-only reduced system and reports velocity_valid = false.
JointEstimate estimate_joint(const MeasurementSet& ms,
                             const std::vector<Vec3>& rrhs,
                             const EstimatorOptions& opts = {});

// Position-only variant (range-difference + angle rows, 3 unknowns), used for
// small receiver counts and available directly for testing.
JointEstimate estimate_position_only(const MeasurementSet& ms,
                                     const std::vector<Vec3>& rrhs,
                                     const EstimatorOptions& opts = {});

}  // namespace mmloc
