#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mmloc {

using Vec3 = Eigen::Vector3d;

inline constexpr double kLightSpeed = 299792458.0;

/// World geometry: fixed receiver positions, the moving transmitter, and an
/// optional reflecting point per receiver index (single-bounce paths).
struct Scenario {
    std::vector<Vec3> rrhs;
    Vec3 ue_pos = Vec3::Zero();
    Vec3 ue_vel = Vec3::Zero();
    /// scatterers[i] is the reflector observed via RRH i (0-based storage);
    /// empty optional means no reflected path for that RRH.
    std::vector<std::optional<Vec3>> scatterers;
    double clock_bias = 0.0;  // seconds; cancels out of all differenced outputs
    double light_speed = kLightSpeed;

    std::size_t n_rrhs() const { return rrhs.size(); }
};

/// Measurement error model. sigma_d is the range-difference standard
/// deviation in meters, sigma_a the angle standard deviation in radians, and
/// the range-rate sigma is fdoa_factor * sigma_d. The dominant_plus_fluctuating
/// kind adds a fixed offset (drawn once per dataset) with the given sigmas on
/// top of a per-sample Gaussian whose sigma is ratio * dominant sigma.
struct NoiseModel {
    enum class Kind { gaussian, dominant_plus_fluctuating };
    Kind kind = Kind::gaussian;
    double sigma_d = 0.0;
    double sigma_a = 0.0;
    double fdoa_factor = 0.1;
    double fluctuating_ratio_tdoa = 1e-4;
    double fluctuating_ratio_fdoa = 1e-3;
    double fluctuating_ratio_aoa = 1e-3;
    std::uint64_t seed = 0;
};

/// Ordered measurement vector and its covariance. The layout is
/// [r_21, rdot_21, ..., r_{Na,1}, rdot_{Na,1}, az_1, el_1, ..., az_Na, el_Na],
/// length 4*na - 2. q reports the covariance of the Gaussian noise part.
struct MeasurementSet {
    int na = 0;
    Eigen::VectorXd m;
    Eigen::MatrixXd q;

    int dim() const { return 4 * na - 2; }
};

/// Reflected-path triple observed at one RRH: range sum differenced against
/// the reference LoS range, plus the two arrival angles at the RRH.
struct MappingMeasurement {
    int rrh_index = 0;  // 1-based receiver index n
    Eigen::Vector3d m_s = Eigen::Vector3d::Zero();
    Eigen::Matrix3d q_s = Eigen::Matrix3d::Identity();
};

struct AoaPair {
    double azimuth = 0.0;    // (-pi, pi], full-quadrant
    double elevation = 0.0;  // [-pi/2, pi/2]
};

/// Unit direction a and the two tangent vectors c (azimuth) and d (elevation)
/// of the spherical parameterization at (azimuth, elevation).
struct AoaBasis {
    Vec3 a;
    Vec3 c;
    Vec3 d;
};

struct NlosParams {
    double range_diff = 0.0;  // d_n1 + d_n2 - r_1
    double azimuth = 0.0;     // at the RRH, toward the scatterer
    double elevation = 0.0;
};

// Receiver indices n are 1-based to match the r_n / r_{n1} naming used
// throughout; n = 1 is the differencing reference.
double los_range(const Scenario& sc, int n);
double tdoa_related(const Scenario& sc, int n);       // r_{n1} = r_n - r_1, n >= 2
double range_rate(const Scenario& sc, int n);         // rdot_n
double range_rate_diff(const Scenario& sc, int n);    // rdot_{n1}, n >= 2
AoaPair aoa_pair(const Vec3& from, const Vec3& to);
AoaBasis aoa_basis(double azimuth, double elevation);
NlosParams nlos_params(const Scenario& sc, int n);

/// Noise-free measurement vector for the first na receivers, with q filled
/// from the model's Gaussian part.
MeasurementSet true_measurements(const Scenario& sc, const NoiseModel& noise, int na);

/// Per-slot standard deviations of the Gaussian part (the full sigma for the
/// gaussian kind, the fluctuating sigma otherwise).
Eigen::VectorXd gaussian_sigmas(const NoiseModel& noise, int na);

/// Per-slot standard deviations of the dominant (fixed offset) part; zero for
/// the plain gaussian kind.
Eigen::VectorXd dominant_sigmas(const NoiseModel& noise, int na);

/// One noisy draw. For dominant_plus_fluctuating the fixed offset is drawn
/// first from the dominant sigmas, then the per-sample fluctuation; a call is
/// a dataset of size one. Batch generation that shares one offset across many
/// samples lives in dataset.hpp.
MeasurementSet synthesize_measurements(const Scenario& sc, const NoiseModel& noise, int na);

/// Same semantics for the reflected-path triple of RRH n. The Gaussian sigmas
/// are (sigma_d, sigma_a, sigma_a).
MappingMeasurement synthesize_mapping_measurement(const Scenario& sc, int n,
                                                  const NoiseModel& noise);

MeasurementSet add_noise(const MeasurementSet& clean, const Eigen::VectorXd& sigmas,
                         std::mt19937_64& rng);

/// Named scenario presets: "hex6" (6 receivers on a flattened hexagon around
/// the origin) and "street18" (18 rooftop receivers along two streets).
Scenario scenario_preset(const std::string& name);

}  // namespace mmloc
