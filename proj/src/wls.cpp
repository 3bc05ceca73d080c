#include "mmloc/wls.hpp"

#include <cmath>
#include <limits>

#include "mmloc/error.hpp"

namespace mmloc {

namespace {

struct Slots {
    int na = 0;
    int dim = 0;
    // Index of the range-difference row for receiver n (2-based receiver).
    int tdoa_row(int n) const { return 2 * (n - 2); }
    int fdoa_row(int n) const { return 2 * (n - 2) + 1; }
    // Index of the azimuth row for receiver j (1-based).
    int az_row(int j) const { return 2 * (na - 1) + 2 * (j - 1); }
    int el_row(int j) const { return 2 * (na - 1) + 2 * (j - 1) + 1; }
};

Slots slots_for(const Eigen::VectorXd& m, const std::vector<Vec3>& rrhs) {
    Slots s;
    if (m.size() < 6 || (m.size() + 2) % 4 != 0) {
        throw error("bad_measurement",
                    "measurement vector length must be 4*Na-2 with Na >= 2");
    }
    s.dim = static_cast<int>(m.size());
    s.na = (s.dim + 2) / 4;
    if (static_cast<int>(rrhs.size()) < s.na) {
        throw error("bad_measurement",
                    "measurement vector implies more receivers than provided");
    }
    return s;
}

}  // namespace

DesignSystem build_design(const Eigen::VectorXd& m, const std::vector<Vec3>& rrhs) {
    const Slots s = slots_for(m, rrhs);
    DesignSystem sys;
    sys.h = Eigen::VectorXd::Zero(s.dim);
    sys.g = Eigen::MatrixXd::Zero(s.dim, 6);

    const Vec3& b1 = rrhs[0];
    const double az1 = m(s.az_row(1));
    const double el1 = m(s.el_row(1));
    const AoaBasis basis1 = aoa_basis(az1, el1);

    for (int n = 2; n <= s.na; ++n) {
        const Vec3& bn = rrhs[static_cast<std::size_t>(n - 1)];
        const double r = m(s.tdoa_row(n));
        const double rd = m(s.fdoa_row(n));
        const double a1b1 = basis1.a.dot(b1);

        sys.h(s.tdoa_row(n)) =
            r * r - 2.0 * r * a1b1 - bn.squaredNorm() + b1.squaredNorm();
        sys.h(s.fdoa_row(n)) = rd * r - rd * a1b1;

        sys.g.block<1, 3>(s.tdoa_row(n), 0) =
            2.0 * ((b1 - bn).transpose() - r * basis1.a.transpose());
        sys.g.block<1, 3>(s.fdoa_row(n), 0) = -rd * basis1.a.transpose();
        sys.g.block<1, 3>(s.fdoa_row(n), 3) =
            (b1 - bn).transpose() - r * basis1.a.transpose();
    }

    for (int j = 1; j <= s.na; ++j) {
        const Vec3& bj = rrhs[static_cast<std::size_t>(j - 1)];
        const AoaBasis basis = aoa_basis(m(s.az_row(j)), m(s.el_row(j)));
        sys.h(s.az_row(j)) = basis.c.dot(bj);
        sys.h(s.el_row(j)) = basis.d.dot(bj);
        sys.g.block<1, 3>(s.az_row(j), 0) = basis.c.transpose();
        sys.g.block<1, 3>(s.el_row(j), 0) = basis.d.transpose();
    }
    return sys;
}

LinearizationB build_linearization(const std::vector<Vec3>& rrhs, int na,
                                   const Vec3& u, const Vec3& udot) {
    if (na < 2 || na > static_cast<int>(rrhs.size())) {
        throw error("bad_na", "receiver count out of range");
    }
    Slots s;
    s.na = na;
    s.dim = 4 * na - 2;
    LinearizationB b = LinearizationB::Zero(s.dim, s.dim);

    const Vec3& b1 = rrhs[0];
    const double r1 = (u - b1).norm();
    if (r1 <= 0.0) throw error("zero_range", "state coincides with receiver 1");

    const AoaPair aoa1 = aoa_pair(b1, u);
    const AoaBasis basis1 = aoa_basis(aoa1.azimuth, aoa1.elevation);
    const double cos_el1 = std::cos(aoa1.elevation);
    // Angle rates of the first receiver's line of sight; these couple the
    // rate-difference rows to that receiver's angle slots.
    const double az_rate1 = basis1.c.dot(udot) / (r1 * cos_el1);
    const double el_rate1 = basis1.d.dot(udot) / r1;

    for (int n = 2; n <= s.na; ++n) {
        const Vec3& bn = rrhs[static_cast<std::size_t>(n - 1)];
        const double rn = (u - bn).norm();
        if (rn <= 0.0) throw error("zero_range", "state coincides with a receiver");
        const double rn1 = rn - r1;
        const double rdn = (u - bn).dot(udot) / rn;

        b(s.tdoa_row(n), s.tdoa_row(n)) = 2.0 * rn;

        b(s.fdoa_row(n), s.tdoa_row(n)) = rdn;
        b(s.fdoa_row(n), s.fdoa_row(n)) = rn;
        b(s.fdoa_row(n), s.az_row(1)) = r1 * rn1 * az_rate1 * cos_el1 * cos_el1;
        b(s.fdoa_row(n), s.el_row(1)) = r1 * rn1 * el_rate1;
    }

    for (int j = 1; j <= s.na; ++j) {
        const Vec3& bj = rrhs[static_cast<std::size_t>(j - 1)];
        const double rj = (u - bj).norm();
        const AoaPair aoaj = aoa_pair(bj, u);
        b(s.az_row(j), s.az_row(j)) = rj * std::cos(aoaj.elevation);
        b(s.el_row(j), s.el_row(j)) = rj;
    }
    return b;
}

Eigen::VectorXd wls_solve(const DesignSystem& sys, const Eigen::MatrixXd& w,
                          double* condition_out) {
    const Eigen::MatrixXd normal = sys.g.transpose() * w * sys.g;
    const Eigen::VectorXd rhs = sys.g.transpose() * w * sys.h;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(normal,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    const double cond = (smin > 0.0) ? smax / smin
                                     : std::numeric_limits<double>::infinity();
    if (condition_out) *condition_out = cond;
    if (!(smin > 0.0) || !std::isfinite(cond)) {
        throw error("singular_system", "normal matrix is singular");
    }
    return svd.solve(rhs);
}

namespace {

JointEstimate run_reweighted(const MeasurementSet& ms,
                             const std::vector<Vec3>& rrhs,
                             const EstimatorOptions& opts,
                             bool position_only) {
    // Rows and unknowns for the reduced (position-only) system: drop the
    // rate-difference rows and the velocity columns.
    const Slots s = slots_for(ms.m, rrhs);

    DesignSystem full = build_design(ms.m, rrhs);
    DesignSystem sys;
    Eigen::MatrixXd q;
    std::vector<int> keep_rows;
    if (position_only) {
        keep_rows.reserve(static_cast<std::size_t>(s.na - 1 + 2 * s.na));
        for (int n = 2; n <= s.na; ++n) keep_rows.push_back(s.tdoa_row(n));
        for (int j = 1; j <= s.na; ++j) {
            keep_rows.push_back(s.az_row(j));
            keep_rows.push_back(s.el_row(j));
        }
        const int rows = static_cast<int>(keep_rows.size());
        sys.h = Eigen::VectorXd(rows);
        sys.g = Eigen::MatrixXd(rows, 3);
        q = Eigen::MatrixXd(rows, rows);
        for (int i = 0; i < rows; ++i) {
            sys.h(i) = full.h(keep_rows[static_cast<std::size_t>(i)]);
            sys.g.row(i) =
                full.g.block<1, 3>(keep_rows[static_cast<std::size_t>(i)], 0);
            for (int j = 0; j < rows; ++j) {
                q(i, j) = ms.q(keep_rows[static_cast<std::size_t>(i)],
                               keep_rows[static_cast<std::size_t>(j)]);
            }
        }
    } else {
        sys = full;
        q = ms.q;
    }

    JointEstimate est;
    Eigen::MatrixXd w = q.inverse();
    Eigen::VectorXd x;
    double cond = 0.0;
    x = wls_solve(sys, w, &cond);
    est.condition = cond;

    Eigen::VectorXd prev = x;
    for (int it = 0; it < opts.reweight_iterations; ++it) {
        const Vec3 u(x(0), x(1), x(2));
        const Vec3 udot = position_only ? Vec3::Zero() : Vec3(x(3), x(4), x(5));

        Eigen::MatrixXd w_next;
        if (position_only) {
            // Diagonal equation-error scaling: range rows scale by 2*r_n,
            // angle rows by r_j*cos(el_j) and r_j.
            const int rows = static_cast<int>(keep_rows.size());
            Eigen::VectorXd scale(rows);
            int k = 0;
            for (int n = 2; n <= s.na; ++n, ++k) {
                scale(k) = 2.0 * (u - rrhs[static_cast<std::size_t>(n - 1)]).norm();
            }
            for (int j = 1; j <= s.na; ++j) {
                const Vec3& bj = rrhs[static_cast<std::size_t>(j - 1)];
                const double rj = (u - bj).norm();
                const AoaPair aoaj = aoa_pair(bj, u);
                scale(k++) = rj * std::cos(aoaj.elevation);
                scale(k++) = rj;
            }
            const Eigen::MatrixXd bqbt =
                scale.asDiagonal() * q * scale.asDiagonal();
            w_next = bqbt.inverse();
        } else {
            const LinearizationB b = build_linearization(rrhs, s.na, u, udot);
            const Eigen::MatrixXd bqbt = b * q * b.transpose();
            w_next = bqbt.inverse();
        }

        double cond_next = 0.0;
        Eigen::VectorXd x_next;
        try {
            x_next = wls_solve(sys, w_next, &cond_next);
        } catch (const error&) {
            break;  // keep the last good estimate
        }
        if (cond_next > opts.max_condition) break;

        x = x_next;
        est.condition = cond_next;
        est.iterations = it + 1;
        if ((x - prev).norm() < opts.convergence_tol) break;
        prev = x;
    }

    est.position = Vec3(x(0), x(1), x(2));
    if (!position_only) {
        est.velocity = Vec3(x(3), x(4), x(5));
        est.velocity_valid = true;
    }
    return est;
}

}  // namespace

JointEstimate estimate_position_only(const MeasurementSet& ms,
                                     const std::vector<Vec3>& rrhs,
                                     const EstimatorOptions& opts) {
    return run_reweighted(ms, rrhs, opts, /*position_only=*/true);
}

JointEstimate estimate_joint(const MeasurementSet& ms,
                             const std::vector<Vec3>& rrhs,
                             const EstimatorOptions& opts) {
    const Slots s = slots_for(ms.m, rrhs);
    // The velocity columns of the pseudo-linear system only span a space of
    // dimension Na - 1, so the joint solve needs at least four receivers.
    if (s.na < 4) return run_reweighted(ms, rrhs, opts, /*position_only=*/true);
    return run_reweighted(ms, rrhs, opts, /*position_only=*/false);
}

}  // namespace mmloc
