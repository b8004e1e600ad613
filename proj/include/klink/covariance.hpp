#pragma once

// Uncertainty of a linkage solution: the Phi map tying the radial unknowns
// to the two attributables, its analytic Jacobians, the implicit-function
// derivative dR/dA, the Jacobians of the compatibility discrepancies
// (including mean-motion drift and aberration terms), propagation of the
// attributable covariances to the 8x8 covariance of (A1, R1, Delta), and the
// Mahalanobis-type identification norm.

#include <Eigen/Dense>
#include <stdexcept>

#include "klink/attributable.hpp"
#include "klink/elements.hpp"
#include "klink/integrals.hpp"

namespace klink {

namespace detail {

// Derivatives of the per-epoch integral coefficients with respect to the
// four attributable components x = (alpha, delta, alpha_dot, delta_dot).
// The observer state (q, q_dot) does not depend on the attributable, so
// G = q x q_dot and c0, c4 have zero derivatives.
struct IntegralDerivs {
    Vec3 dD[4], dE[4], dF[4];
    double dc[6][4] = {};
};

inline IntegralDerivs integral_derivs(const Attributable& a) {
    double ca = std::cos(a.alpha), sa = std::sin(a.alpha);
    double cd = std::cos(a.delta), sd = std::sin(a.delta);
    Vec3 rh{ca * cd, sa * cd, sd};
    Vec3 ra{-sa * cd, ca * cd, 0.0};
    Vec3 rd{-ca * sd, -sa * sd, cd};
    // second derivatives of the line of sight
    Vec3 ra_a{-ca * cd, -sa * cd, 0.0};
    Vec3 ra_d{sa * sd, -ca * sd, 0.0};
    Vec3 rd_a = ra_d;
    Vec3 rd_d = -rh;
    double ad = a.alpha_dot, dd = a.delta_dot;
    const Vec3 &q = a.q, &qd = a.q_dot;

    IntegralDerivs iv;
    // D = q x rho_hat
    iv.dD[0] = cross(q, ra);
    iv.dD[1] = cross(q, rd);
    // E = ad (rh x ra) + dd (rh x rd); note ra x ra = 0, rd x (-rh) gives 0
    iv.dE[0] = ad * cross(rh, ra_a) + dd * (cross(ra, rd) + cross(rh, rd_a));
    iv.dE[1] = ad * (cross(rd, ra) + cross(rh, ra_d));
    iv.dE[2] = cross(rh, ra);
    iv.dE[3] = cross(rh, rd);
    // F = ad (q x ra) + dd (q x rd) + rh x q_dot
    iv.dF[0] = ad * cross(q, ra_a) + dd * cross(q, rd_a) + cross(ra, qd);
    iv.dF[1] = ad * cross(q, ra_d) + dd * cross(q, rd_d) + cross(rd, qd);
    iv.dF[2] = cross(q, ra);
    iv.dF[3] = cross(q, rd);
    // c1 = 2 q_dot . rho_hat
    iv.dc[1][0] = 2.0 * dot(qd, ra);
    iv.dc[1][1] = 2.0 * dot(qd, rd);
    // c2 = eta^2 = ad^2 cd^2 + dd^2
    iv.dc[2][1] = -2.0 * ad * ad * cd * sd;
    iv.dc[2][2] = 2.0 * ad * cd * cd;
    iv.dc[2][3] = 2.0 * dd;
    // c3 = 2 (ad q_dot.ra + dd q_dot.rd)
    iv.dc[3][0] = 2.0 * (ad * dot(qd, ra_a) + dd * dot(qd, rd_a));
    iv.dc[3][1] = 2.0 * (ad * dot(qd, ra_d) + dd * dot(qd, rd_d));
    iv.dc[3][2] = 2.0 * dot(qd, ra);
    iv.dc[3][3] = 2.0 * dot(qd, rd);
    // c5 = 2 q . rho_hat
    iv.dc[5][0] = 2.0 * dot(q, ra);
    iv.dc[5][1] = 2.0 * dot(q, rd);
    return iv;
}

} // namespace detail

// Phi(R; A) = (D1 rd1 - D2 rd2 - J(rho1, rho2), E1 - E2) with
// R = (rho1, rho1_dot, rho2, rho2_dot); its analytic Jacobians with respect
// to R (4x4) and to A = (A1, A2) (4x8).
struct PhiMap {
    Eigen::Vector4d residual;
    Eigen::Matrix4d jac_R;
    Eigen::Matrix<double, 4, 8> jac_A;
};

inline PhiMap build_phi(const Attributable& a1, const Attributable& a2,
                        const Eigen::Vector4d& R) {
    auto c1 = compute_coeffs(a1), c2 = compute_coeffs(a2);
    double rho1 = R(0), rd1 = R(1), rho2 = R(2), rd2 = R(3);
    const double k2 = constants::k_gauss * constants::k_gauss;

    auto g_of = [](const IntegralCoeffs& c, double rho) {
        return rho * rho + c.c[5] * rho + c.c[0];
    };
    auto energy = [&](const IntegralCoeffs& c, double rho, double rd) {
        double g = g_of(c, rho);
        if (g <= 0.0) throw std::domain_error("build_phi: G(rho) <= 0");
        double f = rd * rd + c.c[1] * rd + c.c[2] * rho * rho + c.c[3] * rho + c.c[4];
        return 0.5 * f - k2 / std::sqrt(g);
    };
    // dE/drho and dE/drho_dot for one epoch
    auto denergy_drho = [&](const IntegralCoeffs& c, double rho) {
        double g = g_of(c, rho);
        return c.c[2] * rho + 0.5 * c.c[3] +
               k2 * (2.0 * rho + c.c[5]) / (2.0 * g * std::sqrt(g));
    };

    PhiMap phi;
    Vec3 am = c1.D * rd1 - c2.D * rd2 - am_difference(c1, c2, rho1, rho2);
    phi.residual << am.x, am.y, am.z, energy(c1, rho1, rd1) - energy(c2, rho2, rd2);

    auto put3 = [&](int col, const Vec3& v, Eigen::Matrix4d& m) {
        m(0, col) = v.x;
        m(1, col) = v.y;
        m(2, col) = v.z;
    };
    phi.jac_R.setZero();
    put3(0, 2.0 * rho1 * c1.E + c1.F, phi.jac_R);
    put3(1, c1.D, phi.jac_R);
    put3(2, -(2.0 * rho2 * c2.E + c2.F), phi.jac_R);
    put3(3, -c2.D, phi.jac_R);
    phi.jac_R(3, 0) = denergy_drho(c1, rho1);
    phi.jac_R(3, 1) = rd1 + 0.5 * c1.c[1];
    phi.jac_R(3, 2) = -denergy_drho(c2, rho2);
    phi.jac_R(3, 3) = -(rd2 + 0.5 * c2.c[1]);

    auto iv1 = detail::integral_derivs(a1), iv2 = detail::integral_derivs(a2);
    phi.jac_A.setZero();
    for (int x = 0; x < 4; ++x) {
        // angular momentum rows: Phi_am = D1 rd1 - D2 rd2 + E1 rho1^2
        //   - E2 rho2^2 + F1 rho1 - F2 rho2 + G1 - G2
        Vec3 v1 = iv1.dD[x] * rd1 + iv1.dE[x] * (rho1 * rho1) + iv1.dF[x] * rho1;
        Vec3 v2 = iv2.dD[x] * rd2 + iv2.dE[x] * (rho2 * rho2) + iv2.dF[x] * rho2;
        phi.jac_A(0, x) = v1.x;
        phi.jac_A(1, x) = v1.y;
        phi.jac_A(2, x) = v1.z;
        phi.jac_A(0, 4 + x) = -v2.x;
        phi.jac_A(1, 4 + x) = -v2.y;
        phi.jac_A(2, 4 + x) = -v2.z;
        // energy row
        auto de = [&](const IntegralCoeffs& c, const detail::IntegralDerivs& iv,
                      double rho, double rd) {
            double g = g_of(c, rho);
            return 0.5 * (iv.dc[1][x] * rd + iv.dc[2][x] * rho * rho +
                          iv.dc[3][x] * rho + iv.dc[4][x]) +
                   k2 * (iv.dc[5][x] * rho + iv.dc[0][x]) / (2.0 * g * std::sqrt(g));
        };
        phi.jac_A(3, x) = de(c1, iv1, rho1, rd1);
        phi.jac_A(3, 4 + x) = -de(c2, iv2, rho2, rd2);
    }
    return phi;
}

// dR/dA = -[dPhi/dR]^-1 dPhi/dA at a solution of Phi = 0.
struct SolutionJacobian {
    Eigen::Matrix<double, 4, 8> dR_dA;
    double condition = 0.0; // of dPhi/dR
    bool degenerate = false;
};

inline SolutionJacobian solution_jacobian(const Attributable& a1, const Attributable& a2,
                                          const Eigen::Vector4d& R) {
    PhiMap phi = build_phi(a1, a2, R);
    SolutionJacobian sj;
    Eigen::JacobiSVD<Eigen::Matrix4d> svd(phi.jac_R,
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
    double smin = svd.singularValues()(3), smax = svd.singularValues()(0);
    sj.condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (smin <= 1e-14 * smax) {
        sj.degenerate = true;
        sj.dR_dA.setZero();
        return sj;
    }
    Eigen::FullPivLU<Eigen::Matrix4d> lu(phi.jac_R);
    sj.dR_dA = -lu.solve(phi.jac_A);
    return sj;
}

// d(a, e, I, Omega, omega, ell) / d(alpha, delta, alpha_dot, delta_dot,
// rho, rho_dot) at one attributable-elements point, by central finite
// differences.  The Phi-level Jacobians are analytic; this layer is FD
// because the element transformation is well conditioned and the formulas
// are not worth deriving by hand.
inline Eigen::Matrix<double, 6, 6> element_partials(const AttributableElements& ae,
                                                    const Vec3& q, const Vec3& q_dot,
                                                    double step = 1e-7,
                                                    bool ecliptic_frame = false) {
    auto eval = [&](const AttributableElements& p) {
        Vec3 r, rdot;
        attributable_to_cartesian(p, q, q_dot, r, rdot);
        if (ecliptic_frame) {
            r = equatorial_to_ecliptic(r);
            rdot = equatorial_to_ecliptic(rdot);
        }
        return cartesian_to_keplerian(r, rdot, p.epoch);
    };
    auto coord = [](AttributableElements& p, int j) -> double& {
        switch (j) {
            case 0: return p.alpha;
            case 1: return p.delta;
            case 2: return p.alpha_dot;
            case 3: return p.delta_dot;
            case 4: return p.rho;
            default: return p.rho_dot;
        }
    };
    Eigen::Matrix<double, 6, 6> jac;
    for (int j = 0; j < 6; ++j) {
        AttributableElements plus = ae, minus = ae;
        coord(plus, j) += step;
        coord(minus, j) -= step;
        KeplerianElements kp = eval(plus), km = eval(minus);
        double inv = 1.0 / (2.0 * step);
        jac(0, j) = (kp.a - km.a) * inv;
        jac(1, j) = (kp.e - km.e) * inv;
        jac(2, j) = (kp.inc - km.inc) * inv;
        jac(3, j) = angle_diff_smooth(kp.Omega, km.Omega) * inv;
        jac(4, j) = angle_diff_smooth(kp.omega, km.omega) * inv;
        jac(5, j) = angle_diff_smooth(kp.ell, km.ell) * inv;
    }
    return jac;
}

// d(Delta_omega, Delta_ell)/dA assembled from the element partials and
// dR/dA, with the mean-motion drift term (3/2)(n/a) da (t1~ - t2~) and the
// aberration term (n/c)(d rho1 - d rho2).  `with_corrections = false` drops
// both (the t1~ = t2~, c -> infinity limit used for term-structure tests).
struct DeltaJacobian {
    Eigen::Matrix<double, 2, 8> dDelta_dA;
    bool omega_ill_defined = false; // e ~ 0 at either epoch
};

inline DeltaJacobian delta_jacobians(const Attributable& a1, const Attributable& a2,
                                     const Eigen::Vector4d& R,
                                     const Eigen::Matrix<double, 4, 8>& dR_dA,
                                     bool with_corrections = true,
                                     bool ecliptic_frame = false) {
    double t1 = a1.epoch.mjd, t2 = a2.epoch.mjd;
    if (with_corrections) {
        t1 -= R(0) / constants::c_light;
        t2 -= R(2) / constants::c_light;
    }
    AttributableElements ae1{a1.alpha, a1.delta, a1.alpha_dot, a1.delta_dot,
                             R(0),     R(1),     Epoch{t1}};
    AttributableElements ae2{a2.alpha, a2.delta, a2.alpha_dot, a2.delta_dot,
                             R(2),     R(3),     Epoch{t2}};
    auto p1 = element_partials(ae1, a1.q, a1.q_dot, 1e-7, ecliptic_frame);
    auto p2 = element_partials(ae2, a2.q, a2.q_dot, 1e-7, ecliptic_frame);

    auto elems = [&](const AttributableElements& ae, const Vec3& q, const Vec3& qd) {
        Vec3 r, rdot;
        attributable_to_cartesian(ae, q, qd, r, rdot);
        if (ecliptic_frame) {
            r = equatorial_to_ecliptic(r);
            rdot = equatorial_to_ecliptic(rdot);
        }
        return cartesian_to_keplerian(r, rdot, ae.epoch);
    };
    KeplerianElements el1 = elems(ae1, a1.q, a1.q_dot);
    KeplerianElements el2 = elems(ae2, a2.q, a2.q_dot);
    double a = el1.a;
    double n = constants::k_gauss * std::pow(a, -1.5);

    DeltaJacobian dj;
    dj.omega_ill_defined = el1.e < 1e-8 || el2.e < 1e-8;

    // dR1/dA and dR2/dA split by attributable
    Eigen::Matrix<double, 2, 4> r1a1 = dR_dA.block<2, 4>(0, 0);
    Eigen::Matrix<double, 2, 4> r1a2 = dR_dA.block<2, 4>(0, 4);
    Eigen::Matrix<double, 2, 4> r2a1 = dR_dA.block<2, 4>(2, 0);
    Eigen::Matrix<double, 2, 4> r2a2 = dR_dA.block<2, 4>(2, 4);

    // element-partial rows: index 0 = a, 4 = omega, 5 = ell; columns split
    // into the attributable part (0..3) and the radial part (4..5)
    auto rowA = [](const Eigen::Matrix<double, 6, 6>& p, int r) {
        return p.block<1, 4>(r, 0);
    };
    auto rowR = [](const Eigen::Matrix<double, 6, 6>& p, int r) {
        return p.block<1, 2>(r, 4);
    };

    Eigen::Matrix<double, 1, 4> dw1 =
        rowA(p1, 4) + rowR(p1, 4) * r1a1 - rowR(p2, 4) * r2a1;
    Eigen::Matrix<double, 1, 4> dw2 =
        rowR(p1, 4) * r1a2 - rowA(p2, 4) - rowR(p2, 4) * r2a2;
    Eigen::Matrix<double, 1, 4> dl1 =
        rowA(p1, 5) + rowR(p1, 5) * r1a1 - rowR(p2, 5) * r2a1;
    Eigen::Matrix<double, 1, 4> dl2 =
        rowR(p1, 5) * r1a2 - rowA(p2, 5) - rowR(p2, 5) * r2a2;

    if (with_corrections) {
        double dt = t1 - t2;
        double mm = 1.5 * (n / a) * dt;
        dl1 += mm * (rowA(p1, 0) + rowR(p1, 0) * r1a1);
        dl2 += mm * (rowA(p2, 0) + rowR(p2, 0) * r2a2);
        double nc = n / constants::c_light;
        dl1 += nc * (dR_dA.block<1, 4>(0, 0) - dR_dA.block<1, 4>(2, 0));
        dl2 += nc * (dR_dA.block<1, 4>(0, 4) - dR_dA.block<1, 4>(2, 4));
    }

    dj.dDelta_dA.block<1, 4>(0, 0) = dw1;
    dj.dDelta_dA.block<1, 4>(0, 4) = dw2;
    dj.dDelta_dA.block<1, 4>(1, 0) = dl1;
    dj.dDelta_dA.block<1, 4>(1, 4) = dl2;
    return dj;
}

// Covariance of Psi(A) = (A1, R1, Delta) under the block-diagonal
// Gamma_A = diag(Gamma_A1, Gamma_A2), via the propagation rule
// Gamma_Psi = (dPsi/dA) Gamma_A (dPsi/dA)^T.
struct PsiCovariance {
    Eigen::Matrix<double, 8, 8> gamma_psi;

    Eigen::Matrix4d gamma_A1() const { return gamma_psi.block<4, 4>(0, 0); }
    Eigen::Matrix<double, 4, 2> gamma_A1_R1() const { return gamma_psi.block<4, 2>(0, 4); }
    Eigen::Matrix<double, 4, 2> gamma_A1_delta() const { return gamma_psi.block<4, 2>(0, 6); }
    Eigen::Matrix2d gamma_R1() const { return gamma_psi.block<2, 2>(4, 4); }
    Eigen::Matrix2d gamma_R1_delta() const { return gamma_psi.block<2, 2>(4, 6); }
    Eigen::Matrix2d gamma_delta() const { return gamma_psi.block<2, 2>(6, 6); }
};

inline PsiCovariance propagate(const Eigen::Matrix4d& gamma_A1,
                               const Eigen::Matrix4d& gamma_A2,
                               const Eigen::Matrix<double, 4, 8>& dR_dA,
                               const Eigen::Matrix<double, 2, 8>& dDelta_dA) {
    Eigen::Matrix<double, 8, 8> jac = Eigen::Matrix<double, 8, 8>::Zero();
    jac.block<4, 4>(0, 0).setIdentity();
    jac.block<2, 8>(4, 0) = dR_dA.block<2, 8>(0, 0); // R1 = (rho1, rho1_dot)
    jac.block<2, 8>(6, 0) = dDelta_dA;
    Eigen::Matrix<double, 8, 8> gamma_A = Eigen::Matrix<double, 8, 8>::Zero();
    gamma_A.block<4, 4>(0, 0) = gamma_A1;
    gamma_A.block<4, 4>(4, 4) = gamma_A2;
    PsiCovariance out;
    out.gamma_psi = jac * gamma_A * jac.transpose();
    // enforce exact symmetry against accumulation order
    out.gamma_psi = 0.5 * (out.gamma_psi + out.gamma_psi.transpose()).eval();
    return out;
}

// ||Delta||* = sqrt(Delta Gamma_Delta^-1 Delta^T); the 2x2 inverse in closed
// form with a scaled determinant threshold.
inline double identification_norm(const DeltaPair& delta, const Eigen::Matrix2d& gamma) {
    double det = gamma(0, 0) * gamma(1, 1) - gamma(0, 1) * gamma(1, 0);
    double scale = std::max({std::abs(gamma(0, 0)), std::abs(gamma(1, 1)),
                             std::abs(gamma(0, 1))});
    if (det <= 1e-30 * scale * scale || scale == 0.0)
        throw std::domain_error("identification_norm: Gamma_Delta is singular");
    double c00 = gamma(1, 1) / det, c11 = gamma(0, 0) / det, c01 = -gamma(0, 1) / det;
    double w = delta.d_omega, l = delta.d_ell;
    double q = c00 * w * w + 2.0 * c01 * w * l + c11 * l * l;
    return std::sqrt(std::max(0.0, q));
}

} // namespace klink
