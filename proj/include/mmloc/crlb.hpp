#pragma once

#include <Eigen/Dense>

#include "mmloc/geometry.hpp"

namespace mmloc {

// Jacobian of the noise-free measurement vector with respect to the joint
// state [u; udot].  Rows follow the measurement layout; shape (4*Na-2) x 6.
Eigen::MatrixXd jacobian_measurements(const Scenario& sc, int na);

struct CrlbReport {
    Eigen::MatrixXd covariance;  // 6x6 inverse information matrix
    double pos_bound = 0.0;      // sqrt(trace of the position block)
    double vel_bound = 0.0;      // sqrt(trace of the velocity block)
    double condition = 0.0;      // condition number of the information matrix
};

// Lower bound on the joint estimator covariance from the Gaussian part of the
// noise model: inv(J^T Q^{-1} J).
CrlbReport crlb_joint(const Scenario& sc, const NoiseModel& noise, int na);

// Max-abs entry of (B * J - G) over the given state, where B is the
// equation-error linearization, J the measurement Jacobian and G the design
// matrix, all evaluated at the noise-free measurements.  A small value means
// the re-weighted closed-form solve attains the bound to first order.
double efficiency_identity_gap(const Scenario& sc, int na);

}  // namespace mmloc
