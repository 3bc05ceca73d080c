#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "mmloc/geometry.hpp"

namespace mmloc {

// Pseudo-linear system for a single-bounce scatterer seen by receiver n.
// Unknown is the scatterer position s (3 entries).  Rows: excess-range
// equation, azimuth, elevation.
struct MappingSystem {
    Eigen::Vector3d h;
    Eigen::Matrix3d g;
};

struct ScattererEstimate {
    Vec3 position = Vec3::Zero();
    int rrh_index = 0;  // 1-based receiver the reflection was seen by
    int iterations = 0;
    double condition = 0.0;
};

// Builds the reflection system from a measurement triple
// (excess range-difference, azimuth, elevation) at receiver n, a user
// position estimate, and the receiver positions.
MappingSystem build_mapping_system(const Eigen::Vector3d& m_s, int rrh_index,
                                   const Vec3& user_pos,
                                   const std::vector<Vec3>& rrhs);

// Diagonal equation-error scaling at a candidate scatterer position:
// d(e)/d(m_s) rows scale as (2*d2, d1*cos(el), d1) where d1 is the
// receiver->scatterer leg and d2 the scatterer->user leg.
Eigen::Matrix3d build_mapping_linearization(const Eigen::Vector3d& m_s,
                                            int rrh_index, const Vec3& user_pos,
                                            const std::vector<Vec3>& rrhs,
                                            const Vec3& scatterer);

// Re-weighted closed-form solve for one scatterer.
ScattererEstimate estimate_scatterer(const MappingMeasurement& mm,
                                     const Vec3& user_pos,
                                     const std::vector<Vec3>& rrhs,
                                     int reweight_iterations = 5);

// Runs the scatterer solve for every receiver that observed a reflection.
std::vector<ScattererEstimate> map_environment(
    const std::vector<MappingMeasurement>& mms, const Vec3& user_pos,
    const std::vector<Vec3>& rrhs);

// Jacobian of the noise-free reflection triple with respect to s (3x3).
Eigen::Matrix3d jacobian_mapping(const Scenario& sc, int rrh_index);

struct MappingCrlb {
    Eigen::Matrix3d covariance;
    double pos_bound = 0.0;
};

// Lower bound for the scatterer estimate at receiver n under the Gaussian
// part of the noise model (triple sigmas: sigma_d, sigma_a, sigma_a).
MappingCrlb crlb_scatterer(const Scenario& sc, const NoiseModel& noise,
                           int rrh_index);

// Max-abs entry of (B * J - G) for the mapping system at the true geometry.
double mapping_efficiency_identity_gap(const Scenario& sc, int rrh_index);

}  // namespace mmloc
