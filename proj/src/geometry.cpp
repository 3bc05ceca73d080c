#include "mmloc/geometry.hpp"

#include <cmath>

#include "mmloc/error.hpp"
#include "mmloc/rng.hpp"

namespace mmloc {

namespace {

void check_rrh_index(const Scenario& sc, int n) {
    if (n < 1 || static_cast<std::size_t>(n) > sc.n_rrhs())
        throw error("bad_rrh_index",
                    "receiver index " + std::to_string(n) + " out of range 1.." +
                        std::to_string(sc.n_rrhs()));
}

}  // namespace

double los_range(const Scenario& sc, int n) {
    check_rrh_index(sc, n);
    return (sc.ue_pos - sc.rrhs[n - 1]).norm();
}

double tdoa_related(const Scenario& sc, int n) {
    if (n < 2) throw error("bad_rrh_index", "range difference needs n >= 2");
    // Both paths carry the same clock offset, so it cancels in the difference.
    return los_range(sc, n) - los_range(sc, 1);
}

double range_rate(const Scenario& sc, int n) {
    check_rrh_index(sc, n);
    const Vec3 d = sc.ue_pos - sc.rrhs[n - 1];
    return sc.ue_vel.dot(d) / d.norm();
}

double range_rate_diff(const Scenario& sc, int n) {
    if (n < 2) throw error("bad_rrh_index", "range-rate difference needs n >= 2");
    return range_rate(sc, n) - range_rate(sc, 1);
}

AoaPair aoa_pair(const Vec3& from, const Vec3& to) {
    const Vec3 d = to - from;
    const double r = d.norm();
    if (r == 0.0) throw error("zero_range", "arrival angles undefined at zero range");
    return {std::atan2(d.y(), d.x()), std::asin(d.z() / r)};
}

AoaBasis aoa_basis(double azimuth, double elevation) {
    const double cp = std::cos(azimuth), sp = std::sin(azimuth);
    const double ct = std::cos(elevation), st = std::sin(elevation);
    AoaBasis b;
    b.a = Vec3(ct * cp, ct * sp, st);
    b.c = Vec3(-sp, cp, 0.0);
    b.d = Vec3(-st * cp, -st * sp, ct);
    return b;
}

NlosParams nlos_params(const Scenario& sc, int n) {
    check_rrh_index(sc, n);
    if (sc.scatterers.size() < static_cast<std::size_t>(n) || !sc.scatterers[n - 1])
        throw error("no_scatterer", "no scatterer attached to receiver " + std::to_string(n));
    const Vec3 s = *sc.scatterers[n - 1];
    const double d_n1 = (s - sc.rrhs[n - 1]).norm();
    const double d_n2 = (sc.ue_pos - s).norm();
    const AoaPair ang = aoa_pair(sc.rrhs[n - 1], s);
    return {d_n1 + d_n2 - los_range(sc, 1), ang.azimuth, ang.elevation};
}

Eigen::VectorXd gaussian_sigmas(const NoiseModel& noise, int na) {
    const double sd = noise.sigma_d;
    const double sf = noise.fdoa_factor * noise.sigma_d;
    const double sa = noise.sigma_a;
    Eigen::VectorXd s(4 * na - 2);
    if (noise.kind == NoiseModel::Kind::gaussian) {
        for (int i = 0; i < na - 1; ++i) {
            s[2 * i] = sd;
            s[2 * i + 1] = sf;
        }
        for (int j = 0; j < na; ++j) {
            s[2 * (na - 1) + 2 * j] = sa;
            s[2 * (na - 1) + 2 * j + 1] = sa;
        }
        return s;
    }
    for (int i = 0; i < na - 1; ++i) {
        s[2 * i] = sd * noise.fluctuating_ratio_tdoa;
        s[2 * i + 1] = sf * noise.fluctuating_ratio_fdoa;
    }
    for (int j = 0; j < na; ++j) {
        s[2 * (na - 1) + 2 * j] = sa * noise.fluctuating_ratio_aoa;
        s[2 * (na - 1) + 2 * j + 1] = sa * noise.fluctuating_ratio_aoa;
    }
    return s;
}

Eigen::VectorXd dominant_sigmas(const NoiseModel& noise, int na) {
    if (noise.kind == NoiseModel::Kind::gaussian)
        return Eigen::VectorXd::Zero(4 * na - 2);
    NoiseModel g = noise;
    g.kind = NoiseModel::Kind::gaussian;
    return gaussian_sigmas(g, na);
}

MeasurementSet true_measurements(const Scenario& sc, const NoiseModel& noise, int na) {
    if (na < 2 || static_cast<std::size_t>(na) > sc.n_rrhs())
        throw error("bad_na", "need 2 <= na <= number of receivers");
    const int dim = 4 * na - 2;
    MeasurementSet ms;
    ms.na = na;
    ms.m.resize(dim);
    for (int n = 2; n <= na; ++n) {
        ms.m[2 * (n - 2)] = tdoa_related(sc, n);
        ms.m[2 * (n - 2) + 1] = range_rate_diff(sc, n);
    }
    for (int j = 1; j <= na; ++j) {
        const AoaPair ang = aoa_pair(sc.rrhs[j - 1], sc.ue_pos);
        ms.m[2 * (na - 1) + 2 * (j - 1)] = ang.azimuth;
        ms.m[2 * (na - 1) + 2 * (j - 1) + 1] = ang.elevation;
    }
    ms.q = gaussian_sigmas(noise, na).array().square().matrix().asDiagonal();
    return ms;
}

MeasurementSet add_noise(const MeasurementSet& clean, const Eigen::VectorXd& sigmas,
                         std::mt19937_64& rng) {
    MeasurementSet out = clean;
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < out.m.size(); ++i) out.m[i] += sigmas[i] * gauss(rng);
    return out;
}

MeasurementSet synthesize_measurements(const Scenario& sc, const NoiseModel& noise, int na) {
    MeasurementSet ms = true_measurements(sc, noise, na);
    std::mt19937_64 rng = child_rng(noise.seed, 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    if (noise.kind == NoiseModel::Kind::dominant_plus_fluctuating) {
        const Eigen::VectorXd dom = dominant_sigmas(noise, na);
        for (int i = 0; i < ms.m.size(); ++i) ms.m[i] += dom[i] * gauss(rng);
    }
    const Eigen::VectorXd fl = gaussian_sigmas(noise, na);
    for (int i = 0; i < ms.m.size(); ++i) ms.m[i] += fl[i] * gauss(rng);
    return ms;
}

MappingMeasurement synthesize_mapping_measurement(const Scenario& sc, int n,
                                                  const NoiseModel& noise) {
    const NlosParams p = nlos_params(sc, n);
    MappingMeasurement mm;
    mm.rrh_index = n;
    mm.m_s = Eigen::Vector3d(p.range_diff, p.azimuth, p.elevation);

    const double sd = noise.sigma_d, sa = noise.sigma_a;
    Eigen::Vector3d fl(sd, sa, sa);
    Eigen::Vector3d dom = Eigen::Vector3d::Zero();
    if (noise.kind == NoiseModel::Kind::dominant_plus_fluctuating) {
        dom = fl;
        fl = Eigen::Vector3d(sd * noise.fluctuating_ratio_tdoa,
                             sa * noise.fluctuating_ratio_aoa,
                             sa * noise.fluctuating_ratio_aoa);
    }
    mm.q_s = fl.array().square().matrix().asDiagonal();

    std::mt19937_64 rng = child_rng(noise.seed, static_cast<std::uint64_t>(n));
    std::normal_distribution<double> gauss(0.0, 1.0);
    if (noise.kind == NoiseModel::Kind::dominant_plus_fluctuating)
        for (int i = 0; i < 3; ++i) mm.m_s[i] += dom[i] * gauss(rng);
    for (int i = 0; i < 3; ++i) mm.m_s[i] += fl[i] * gauss(rng);
    return mm;
}

Scenario scenario_preset(const std::string& name) {
    Scenario sc;
    if (name == "hex6") {
        sc.rrhs = {Vec3(-400, 0, 0),    Vec3(400, 0, 0),    Vec3(200, 350, 0),
                   Vec3(-200, 350, 0),  Vec3(-200, -350, 0), Vec3(200, -350, 0)};
        sc.ue_pos = Vec3(300, -20, -100);
        sc.ue_vel = Vec3(-9, 7, 5);
        sc.scatterers.assign(sc.rrhs.size(), std::nullopt);
        sc.scatterers[1] = Vec3(50, 200, -70);
        return sc;
    }
    if (name == "street18") {
        const double xs[] = {235.5042, 287.5042, 235.5042, 287.5042, 235.5042, 287.5042,
                             235.5042, 287.5042, 235.5042, 287.5042, 235.5042, 287.5042,
                             38.0751,  38.0751,  188.0751, 188.0751, 338.0751, 338.0751};
        const double ys[] = {389.5038, 389.5038, 489.5038, 489.5038, 589.5038, 589.5038,
                             851.5038, 851.5038, 651.5038, 651.5038, 751.5038, 751.5038,
                             594.7361, 646.7361, 594.7361, 646.7361, 594.7361, 646.7361};
        for (int i = 0; i < 18; ++i) sc.rrhs.emplace_back(xs[i], ys[i], 6.0);
        sc.ue_pos = Vec3(260, 600, 1.5);
        sc.ue_vel = Vec3(1.5, 3.0, 0.0);
        sc.scatterers.assign(sc.rrhs.size(), std::nullopt);
        return sc;
    }
    throw error("unknown_preset", "unknown scenario preset: " + name);
}

}  // namespace mmloc
