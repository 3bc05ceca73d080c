#include "mmloc/mapping.hpp"

#include <cmath>
#include <limits>

#include "mmloc/error.hpp"

namespace mmloc {

namespace {

void check_index(int rrh_index, const std::vector<Vec3>& rrhs) {
    if (rrh_index < 1 || rrh_index > static_cast<int>(rrhs.size())) {
        throw error("bad_rrh_index", "receiver index out of range");
    }
}

}  // namespace

MappingSystem build_mapping_system(const Eigen::Vector3d& m_s, int rrh_index,
                                   const Vec3& user_pos,
                                   const std::vector<Vec3>& rrhs) {
    check_index(rrh_index, rrhs);
    const Vec3& bn = rrhs[static_cast<std::size_t>(rrh_index - 1)];
    const Vec3& b1 = rrhs[0];
    const Vec3& u = user_pos;

    const double r1 = (u - b1).norm();
    const double total = m_s(0) + r1;  // full reflected path length
    const AoaBasis basis = aoa_basis(m_s(1), m_s(2));

    MappingSystem sys;
    sys.h(0) = total * total + 2.0 * total * basis.a.dot(bn) - u.squaredNorm() +
               bn.squaredNorm();
    sys.h(1) = basis.c.dot(bn);
    sys.h(2) = basis.d.dot(bn);

    sys.g.row(0) = 2.0 * (bn - u + total * basis.a).transpose();
    sys.g.row(1) = basis.c.transpose();
    sys.g.row(2) = basis.d.transpose();
    return sys;
}

Eigen::Matrix3d build_mapping_linearization(const Eigen::Vector3d& m_s,
                                            int rrh_index, const Vec3& user_pos,
                                            const std::vector<Vec3>& rrhs,
                                            const Vec3& scatterer) {
    check_index(rrh_index, rrhs);
    const Vec3& bn = rrhs[static_cast<std::size_t>(rrh_index - 1)];
    const double d1 = (scatterer - bn).norm();
    const double d2 = (user_pos - scatterer).norm();
    if (d1 <= 0.0 || d2 <= 0.0) {
        throw error("zero_range", "degenerate reflection geometry");
    }
    Eigen::Matrix3d b = Eigen::Matrix3d::Zero();
    b(0, 0) = 2.0 * d2;
    b(1, 1) = d1 * std::cos(m_s(2));
    b(2, 2) = d1;
    return b;
}

ScattererEstimate estimate_scatterer(const MappingMeasurement& mm,
                                     const Vec3& user_pos,
                                     const std::vector<Vec3>& rrhs,
                                     int reweight_iterations) {
    const MappingSystem sys =
        build_mapping_system(mm.m_s, mm.rrh_index, user_pos, rrhs);

    ScattererEstimate est;
    est.rrh_index = mm.rrh_index;

    auto solve = [&](const Eigen::Matrix3d& w, double* cond_out) {
        const Eigen::Matrix3d normal = sys.g.transpose() * w * sys.g;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(normal);
        const double lo = eig.eigenvalues()(0);
        const double hi = eig.eigenvalues()(2);
        if (!(lo > 0.0)) {
            throw error("singular_system", "mapping normal matrix is singular");
        }
        if (cond_out) *cond_out = hi / lo;
        const Eigen::Vector3d rhs = sys.g.transpose() * (w * sys.h);
        return Vec3(eig.eigenvectors() *
                    (eig.eigenvectors().transpose() * rhs).cwiseQuotient(
                        eig.eigenvalues()));
    };

    Eigen::Matrix3d w = mm.q_s.inverse();
    double cond = 0.0;
    Vec3 x = solve(w, &cond);
    est.condition = cond;

    Vec3 prev = x;
    for (int it = 0; it < reweight_iterations; ++it) {
        Eigen::Matrix3d b;
        try {
            b = build_mapping_linearization(mm.m_s, mm.rrh_index, user_pos, rrhs, x);
        } catch (const error&) {
            break;
        }
        const Eigen::Matrix3d w_next = (b * mm.q_s * b.transpose()).inverse();
        double cond_next = 0.0;
        Vec3 x_next;
        try {
            x_next = solve(w_next, &cond_next);
        } catch (const error&) {
            break;
        }
        x = x_next;
        est.condition = cond_next;
        est.iterations = it + 1;
        if ((x - prev).norm() < 1e-9) break;
        prev = x;
    }
    est.position = x;
    return est;
}

std::vector<ScattererEstimate> map_environment(
    const std::vector<MappingMeasurement>& mms, const Vec3& user_pos,
    const std::vector<Vec3>& rrhs) {
    std::vector<ScattererEstimate> out;
    out.reserve(mms.size());
    for (const MappingMeasurement& mm : mms) {
        out.push_back(estimate_scatterer(mm, user_pos, rrhs));
    }
    return out;
}

Eigen::Matrix3d jacobian_mapping(const Scenario& sc, int rrh_index) {
    check_index(rrh_index, sc.rrhs);
    const auto& slot = sc.scatterers[static_cast<std::size_t>(rrh_index - 1)];
    if (!slot) throw error("no_scatterer", "receiver has no reflection path");
    const Vec3& s = *slot;
    const Vec3& bn = sc.rrhs[static_cast<std::size_t>(rrh_index - 1)];
    const Vec3& u = sc.ue_pos;

    const double d1 = (s - bn).norm();
    const double d2 = (u - s).norm();
    const AoaPair aoa = aoa_pair(bn, s);
    const AoaBasis basis = aoa_basis(aoa.azimuth, aoa.elevation);

    Eigen::Matrix3d j;
    j.row(0) = ((s - bn) / d1 + (s - u) / d2).transpose();
    j.row(1) = basis.c.transpose() / (d1 * std::cos(aoa.elevation));
    j.row(2) = basis.d.transpose() / d1;
    return j;
}

MappingCrlb crlb_scatterer(const Scenario& sc, const NoiseModel& noise,
                           int rrh_index) {
    const Eigen::Matrix3d j = jacobian_mapping(sc, rrh_index);
    Eigen::Vector3d sigmas(noise.sigma_d, noise.sigma_a, noise.sigma_a);
    if (noise.kind == NoiseModel::Kind::dominant_plus_fluctuating) {
        sigmas(0) *= noise.fluctuating_ratio_tdoa;
        sigmas(1) *= noise.fluctuating_ratio_aoa;
        sigmas(2) *= noise.fluctuating_ratio_aoa;
    }
    const Eigen::Vector3d w = sigmas.array().square().inverse();
    const Eigen::Matrix3d info = j.transpose() * w.asDiagonal() * j;

    MappingCrlb rep;
    rep.covariance = info.inverse();
    rep.pos_bound = std::sqrt(rep.covariance.trace());
    return rep;
}

double mapping_efficiency_identity_gap(const Scenario& sc, int rrh_index) {
    const auto& slot = sc.scatterers[static_cast<std::size_t>(rrh_index - 1)];
    if (!slot) throw error("no_scatterer", "receiver has no reflection path");
    const NlosParams p = nlos_params(sc, rrh_index);

    Eigen::Vector3d m_s(p.range_diff, p.azimuth, p.elevation);
    const MappingSystem sys =
        build_mapping_system(m_s, rrh_index, sc.ue_pos, sc.rrhs);
    const Eigen::Matrix3d b = build_mapping_linearization(
        m_s, rrh_index, sc.ue_pos, sc.rrhs, *slot);
    const Eigen::Matrix3d j = jacobian_mapping(sc, rrh_index);

    return (b * j - sys.g).cwiseAbs().maxCoeff();
}

}  // namespace mmloc
