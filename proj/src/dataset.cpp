#include "mmloc/dataset.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "mmloc/error.hpp"
#include "mmloc/mapping.hpp"
#include "mmloc/rng.hpp"
#include "mmloc/wls.hpp"

namespace mmloc {

NoiseModel family_noise(const std::string& name, std::uint64_t seed) {
    NoiseModel noise;
    noise.seed = seed;
    if (name.size() == 2 && name[0] == 'D' && name[1] >= '0' && name[1] <= '4') {
        const int k = name[1] - '0';
        const double scale = std::pow(10.0, k);
        noise.kind = NoiseModel::Kind::dominant_plus_fluctuating;
        noise.sigma_d = 0.1 * scale;
        noise.sigma_a = 0.001 * scale;
        noise.fdoa_factor = 0.1;
        noise.fluctuating_ratio_tdoa = 1e-4;
        noise.fluctuating_ratio_fdoa = 1e-3;
        noise.fluctuating_ratio_aoa = 1e-3;
        return noise;
    }
    if (name.size() == 2 && name[0] == 'P' && name[1] >= '1' && name[1] <= '4') {
        const int k = name[1] - '0';
        if (k == 4) {
            noise.kind = NoiseModel::Kind::gaussian;
            noise.sigma_d = 1.0;
            noise.sigma_a = 0.01;
            noise.fdoa_factor = 0.1;
            return noise;
        }
        const double ratio_scale = std::pow(10.0, k - 1);
        noise.kind = NoiseModel::Kind::dominant_plus_fluctuating;
        noise.sigma_d = 1.0;
        noise.sigma_a = 0.01;
        noise.fdoa_factor = 0.1;
        noise.fluctuating_ratio_tdoa = 1e-4 * ratio_scale;
        noise.fluctuating_ratio_fdoa = 1e-3 * ratio_scale;
        noise.fluctuating_ratio_aoa = 1e-3 * ratio_scale;
        return noise;
    }
    throw error("unknown_family", "unknown noise family: " + name);
}

bool is_known_family(const std::string& name) {
    try {
        family_noise(name);
        return true;
    } catch (const error&) {
        return false;
    }
}

std::vector<std::string> dominant_family_names() {
    return {"D0", "D1", "D2", "D3", "D4"};
}

std::vector<std::string> ratio_family_names() {
    return {"P1", "P2", "P3", "P4"};
}

TrainingSet ResidualDataset::to_training_set() const {
    if (samples.empty()) {
        throw error("bad_training_set", "dataset has no samples");
    }
    TrainingSet ts;
    const Eigen::Index m_dim = samples.front().m.size();
    const Eigen::Index e_dim = samples.front().residual.size();
    ts.inputs.resize(m_dim, static_cast<Eigen::Index>(samples.size()));
    ts.targets.resize(e_dim, static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        ts.inputs.col(static_cast<Eigen::Index>(i)) = samples[i].m;
        ts.targets.col(static_cast<Eigen::Index>(i)) = samples[i].residual;
    }
    return ts;
}

ResidualDataset generate_residual_dataset(const Scenario& sc,
                                          const NoiseModel& noise, int na,
                                          int count, const SampleBox& box) {
    if (count < 1) throw error("bad_config", "dataset count must be positive");

    ResidualDataset ds;
    ds.na = na;
    ds.samples.reserve(static_cast<std::size_t>(count));

    // The dominant offset is a property of the whole dataset: one draw,
    // shared by every sample (index 0 of the seed stream).
    const Eigen::VectorXd dom_sigmas = dominant_sigmas(noise, na);
    Eigen::VectorXd offset = Eigen::VectorXd::Zero(dom_sigmas.size());
    {
        std::mt19937_64 rng = child_rng(noise.seed, 0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (Eigen::Index i = 0; i < offset.size(); ++i) {
            offset(i) = dom_sigmas(i) * gauss(rng);
        }
    }
    const Eigen::VectorXd fluct_sigmas = gaussian_sigmas(noise, na);

    for (int idx = 0; idx < count; ++idx) {
        std::mt19937_64 rng = child_rng(noise.seed, static_cast<std::uint64_t>(idx) + 1);
        std::uniform_real_distribution<double> upos(-box.position_half_width,
                                                    box.position_half_width);
        std::uniform_real_distribution<double> uvel(-box.velocity_half_width,
                                                    box.velocity_half_width);
        Scenario local = sc;
        local.ue_pos = sc.ue_pos + Vec3(upos(rng), upos(rng), upos(rng));
        local.ue_vel = sc.ue_vel + Vec3(uvel(rng), uvel(rng), uvel(rng));

        NoiseModel clean;
        clean.kind = NoiseModel::Kind::gaussian;
        clean.sigma_d = 0.0;
        clean.sigma_a = 0.0;
        MeasurementSet ms = true_measurements(local, clean, na);

        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::VectorXd noisy = ms.m + offset;
        for (Eigen::Index i = 0; i < noisy.size(); ++i) {
            noisy(i) += fluct_sigmas(i) * gauss(rng);
        }

        ResidualSample sample;
        sample.position = local.ue_pos;
        sample.velocity = local.ue_vel;
        sample.m = noisy;

        const DesignSystem sys = build_design(noisy, local.rrhs);
        Eigen::VectorXd x(6);
        x << local.ue_pos, local.ue_vel;
        sample.residual = sys.h - sys.g * x;
        ds.samples.push_back(std::move(sample));
    }
    return ds;
}

TrainingSet MappingResidualDataset::to_training_set() const {
    if (samples.empty()) {
        throw error("bad_training_set", "dataset has no samples");
    }
    TrainingSet ts;
    ts.inputs.resize(3, static_cast<Eigen::Index>(samples.size()));
    ts.targets.resize(3, static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        ts.inputs.col(static_cast<Eigen::Index>(i)) = samples[i].m_s;
        ts.targets.col(static_cast<Eigen::Index>(i)) = samples[i].residual;
    }
    return ts;
}

MappingResidualDataset generate_mapping_residual_dataset(
    const Scenario& sc, const NoiseModel& noise, int rrh_index, int count,
    double scatterer_half_width) {
    if (count < 1) throw error("bad_config", "dataset count must be positive");
    const auto& slot = sc.scatterers.at(static_cast<std::size_t>(rrh_index - 1));
    if (!slot) throw error("no_scatterer", "receiver has no reflection path");

    MappingResidualDataset ds;
    ds.rrh_index = rrh_index;
    ds.samples.reserve(static_cast<std::size_t>(count));

    Eigen::Vector3d sigmas(noise.sigma_d, noise.sigma_a, noise.sigma_a);
    Eigen::Vector3d dom = Eigen::Vector3d::Zero();
    Eigen::Vector3d fluct = sigmas;
    if (noise.kind == NoiseModel::Kind::dominant_plus_fluctuating) {
        dom = sigmas;
        fluct = Eigen::Vector3d(sigmas(0) * noise.fluctuating_ratio_tdoa,
                                sigmas(1) * noise.fluctuating_ratio_aoa,
                                sigmas(2) * noise.fluctuating_ratio_aoa);
    }

    Eigen::Vector3d offset = Eigen::Vector3d::Zero();
    {
        std::mt19937_64 rng = child_rng(noise.seed, 0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int i = 0; i < 3; ++i) offset(i) = dom(i) * gauss(rng);
    }

    for (int idx = 0; idx < count; ++idx) {
        std::mt19937_64 rng = child_rng(noise.seed, static_cast<std::uint64_t>(idx) + 1);
        std::uniform_real_distribution<double> shift(-scatterer_half_width,
                                                     scatterer_half_width);
        Scenario local = sc;
        const Vec3 s = *slot + Vec3(shift(rng), shift(rng), shift(rng));
        local.scatterers[static_cast<std::size_t>(rrh_index - 1)] = s;

        const NlosParams p = nlos_params(local, rrh_index);
        Eigen::Vector3d clean_m(p.range_diff, p.azimuth, p.elevation);

        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::Vector3d noisy = clean_m + offset;
        for (int i = 0; i < 3; ++i) noisy(i) += fluct(i) * gauss(rng);

        MappingResidualSample sample;
        sample.scatterer = s;
        sample.m_s = noisy;
        const MappingSystem sys =
            build_mapping_system(noisy, rrh_index, local.ue_pos, local.rrhs);
        sample.residual = sys.h - sys.g * s;
        ds.samples.push_back(std::move(sample));
    }
    return ds;
}

void write_dataset_csv(const ResidualDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw error("io_error", "cannot write dataset file: " + path);
    out.precision(17);

    const Eigen::Index m_dim = ds.samples.empty() ? 0 : ds.samples.front().m.size();
    const Eigen::Index e_dim =
        ds.samples.empty() ? 0 : ds.samples.front().residual.size();
    out << "px,py,pz,vx,vy,vz";
    for (Eigen::Index i = 0; i < m_dim; ++i) out << ",m" << i;
    for (Eigen::Index i = 0; i < e_dim; ++i) out << ",e" << i;
    out << '\n';
    for (const ResidualSample& s : ds.samples) {
        out << s.position.x() << ',' << s.position.y() << ',' << s.position.z()
            << ',' << s.velocity.x() << ',' << s.velocity.y() << ','
            << s.velocity.z();
        for (Eigen::Index i = 0; i < m_dim; ++i) out << ',' << s.m(i);
        for (Eigen::Index i = 0; i < e_dim; ++i) out << ',' << s.residual(i);
        out << '\n';
    }
}

}  // namespace mmloc
