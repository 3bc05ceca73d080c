#include "mmloc/crlb.hpp"

#include <cmath>

#include "mmloc/error.hpp"
#include "mmloc/wls.hpp"

namespace mmloc {

Eigen::MatrixXd jacobian_measurements(const Scenario& sc, int na) {
    if (na < 2 || na > static_cast<int>(sc.n_rrhs())) {
        throw error("bad_na", "receiver count out of range");
    }
    const int dim = 4 * na - 2;
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(dim, 6);

    const Vec3& u = sc.ue_pos;
    const Vec3& v = sc.ue_vel;
    const Vec3& b1 = sc.rrhs[0];
    const double r1 = (u - b1).norm();
    const Vec3 g1 = (u - b1) / r1;      // unit vector receiver 1 -> user
    const double rd1 = g1.dot(v);

    for (int n = 2; n <= na; ++n) {
        const Vec3& bn = sc.rrhs[static_cast<std::size_t>(n - 1)];
        const double rn = (u - bn).norm();
        const Vec3 gn = (u - bn) / rn;
        const double rdn = gn.dot(v);
        const int row = 2 * (n - 2);
        // d(r_n - r_1)/du
        j.block<1, 3>(row, 0) = (gn - g1).transpose();
        // d(rdot_n - rdot_1)/du and /dudot
        j.block<1, 3>(row + 1, 0) =
            (v - rdn * gn).transpose() / rn - (v - rd1 * g1).transpose() / r1;
        j.block<1, 3>(row + 1, 3) = (gn - g1).transpose();
    }

    for (int jj = 1; jj <= na; ++jj) {
        const Vec3& bj = sc.rrhs[static_cast<std::size_t>(jj - 1)];
        const double rj = (u - bj).norm();
        const AoaPair aoa = aoa_pair(bj, u);
        const AoaBasis basis = aoa_basis(aoa.azimuth, aoa.elevation);
        const int row = 2 * (na - 1) + 2 * (jj - 1);
        j.block<1, 3>(row, 0) =
            basis.c.transpose() / (rj * std::cos(aoa.elevation));
        j.block<1, 3>(row + 1, 0) = basis.d.transpose() / rj;
    }
    return j;
}

CrlbReport crlb_joint(const Scenario& sc, const NoiseModel& noise, int na) {
    const Eigen::MatrixXd j = jacobian_measurements(sc, na);
    const Eigen::VectorXd sigmas = gaussian_sigmas(noise, na);
    const Eigen::VectorXd w = sigmas.array().square().inverse();
    const Eigen::MatrixXd info = j.transpose() * w.asDiagonal() * j;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(info,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    if (!(smin > 0.0)) {
        throw error("singular_system", "information matrix is singular");
    }

    CrlbReport rep;
    rep.covariance = info.inverse();
    rep.pos_bound = std::sqrt(rep.covariance.topLeftCorner<3, 3>().trace());
    rep.vel_bound = std::sqrt(rep.covariance.bottomRightCorner<3, 3>().trace());
    rep.condition = sv(0) / smin;
    return rep;
}

double efficiency_identity_gap(const Scenario& sc, int na) {
    NoiseModel clean;
    clean.kind = NoiseModel::Kind::gaussian;
    clean.sigma_d = 0.0;
    clean.sigma_a = 0.0;
    const MeasurementSet ms = true_measurements(sc, clean, na);

    const DesignSystem sys = build_design(ms.m, sc.rrhs);
    const LinearizationB b = build_linearization(sc.rrhs, na, sc.ue_pos, sc.ue_vel);
    const Eigen::MatrixXd j = jacobian_measurements(sc, na);

    return (b * j - sys.g).cwiseAbs().maxCoeff();
}

}  // namespace mmloc
