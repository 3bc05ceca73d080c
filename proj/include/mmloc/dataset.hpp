#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mmloc/geometry.hpp"
#include "mmloc/mlp.hpp"

namespace mmloc {

// Named noise families used throughout the experiments.
//
// D0..D4 share fluctuating ratios (1e-4 range, 1e-3 rate, 1e-3 angle) and
// scale the dominant levels (0.1 m, 0.01 m/s, 0.001 rad) by 10^k.
// P1..P3 keep the D1 dominant levels and scale the ratios by 10;
// P4 is pure Gaussian noise at (1 m, 0.1 m/s, 0.01 rad).
NoiseModel family_noise(const std::string& name, std::uint64_t seed = 0);

// True if the family name is recognized.
bool is_known_family(const std::string& name);
std::vector<std::string> dominant_family_names();  // D0..D4
std::vector<std::string> ratio_family_names();     // P1..P4

struct SampleBox {
    double position_half_width = 50.0;  // uniform offset around the preset UE
    double velocity_half_width = 5.0;
};

// One simulated snapshot: the true state, the noisy measurements, and the
// equation-level error of the pseudo-linear system at the true state.
struct ResidualSample {
    Vec3 position;
    Vec3 velocity;
    Eigen::VectorXd m;         // noisy measurement vector
    Eigen::VectorXd residual;  // h - G * [u; udot] at the true state
};

struct ResidualDataset {
    std::vector<ResidualSample> samples;
    int na = 0;
    // Training matrices: inputs are measurement vectors, targets are the
    // equation-level errors.
    TrainingSet to_training_set() const;
};

// Draws `count` snapshots around the scenario's nominal state.  For a
// dominant_plus_fluctuating noise model, the dominant offset is drawn once
// for the whole dataset and shared by all samples; the fluctuating part is
// drawn per sample.  Deterministic in (noise.seed, sample index).
ResidualDataset generate_residual_dataset(const Scenario& sc,
                                          const NoiseModel& noise, int na,
                                          int count, const SampleBox& box = {});

// Writes samples as CSV: columns pu..pz, vx..vz, then m_0.., then e_0..
void write_dataset_csv(const ResidualDataset& ds, const std::string& path);

// One simulated reflection snapshot for the mapping stage.
struct MappingResidualSample {
    Vec3 scatterer;
    Eigen::Vector3d m_s;       // noisy (excess range, azimuth, elevation)
    Eigen::Vector3d residual;  // h_s - G_s * s at the true scatterer
};

struct MappingResidualDataset {
    std::vector<MappingResidualSample> samples;
    int rrh_index = 0;
    TrainingSet to_training_set() const;
};

// Draws reflection snapshots with the scatterer perturbed uniformly within
// +/- scatterer_half_width around the scenario's scatterer for the given
// receiver.  The user state stays at the scenario value.  Dominant offsets
// (when present) are drawn once per dataset, as in the joint-stage dataset.
MappingResidualDataset generate_mapping_residual_dataset(
    const Scenario& sc, const NoiseModel& noise, int rrh_index, int count,
    double scatterer_half_width = 20.0);

}  // namespace mmloc
