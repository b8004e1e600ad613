#pragma once

// Coordinate conversions between attributable elements, Cartesian
// heliocentric states and Keplerian elements, the Kepler equation, and the
// compatibility conditions left over after matching energy and angular
// momentum.

#include <cmath>
#include <stdexcept>

#include "klink/core.hpp"

namespace klink {

struct AttributableElements {
    double alpha = 0.0, delta = 0.0;         // rad
    double alpha_dot = 0.0, delta_dot = 0.0; // rad/day
    double rho = 0.0;                        // AU
    double rho_dot = 0.0;                    // AU/day
    Epoch epoch;
};

struct KeplerianElements {
    double a = 0.0;     // AU
    double e = 0.0;
    double inc = 0.0;   // rad
    double Omega = 0.0; // rad
    double omega = 0.0; // rad
    double ell = 0.0;   // mean anomaly, rad
    Epoch epoch;
};

struct DeltaPair {
    double d_omega = 0.0; // rad, in (-pi, pi]
    double d_ell = 0.0;   // rad, in (-pi, pi]
};

struct NonEllipticError : std::domain_error {
    using std::domain_error::domain_error;
};

// r = q + rho rho_hat ; r_dot = q_dot + rho_dot rho_hat + rho (rho_hat_a adot + rho_hat_d ddot)
inline void attributable_to_cartesian(const AttributableElements& ae, const Vec3& q,
                                      const Vec3& q_dot, Vec3& r, Vec3& r_dot) {
    double ca = std::cos(ae.alpha), sa = std::sin(ae.alpha);
    double cd = std::cos(ae.delta), sd = std::sin(ae.delta);
    Vec3 rho_hat{ca * cd, sa * cd, sd};
    Vec3 rho_a{-sa * cd, ca * cd, 0.0};
    Vec3 rho_d{-ca * sd, -sa * sd, cd};
    r = q + ae.rho * rho_hat;
    r_dot = q_dot + ae.rho_dot * rho_hat +
            ae.rho * (ae.alpha_dot * rho_a + ae.delta_dot * rho_d);
}

// Newton solve of E - e sin E = ell, |residual| < 1e-14
inline double solve_kepler(double ell, double e) {
    if (e < 0.0 || e >= 1.0) throw std::domain_error("solve_kepler: need 0 <= e < 1");
    double l = angle_diff_smooth(ell, 0.0); // reduce to (-pi, pi]
    double sgn = std::sin(l) >= 0.0 ? 1.0 : -1.0;
    double E = l + e * sgn;
    for (int it = 0; it < 60; ++it) {
        double f = E - e * std::sin(E) - l;
        if (std::abs(f) < 1e-15) break;
        double fp = 1.0 - e * std::cos(E);
        E -= f / fp;
    }
    // final residual check
    if (std::abs(E - e * std::sin(E) - l) > 1e-13)
        throw std::runtime_error("solve_kepler: no convergence");
    return E + (ell - l); // restore original branch
}

// Elements from heliocentric state; the reference plane is the xy-plane of
// whatever inertial frame r, r_dot are expressed in.
inline KeplerianElements cartesian_to_keplerian(const Vec3& r, const Vec3& r_dot,
                                                Epoch epoch) {
    const double mu = constants::k_gauss * constants::k_gauss;
    double rn = norm(r);
    double v2 = dot(r_dot, r_dot);
    double energy2 = v2 - 2.0 * mu / rn; // 2 * specific energy
    if (energy2 >= 0.0)
        throw NonEllipticError("cartesian_to_keplerian: nonnegative two-body energy");
    Vec3 c = cross(r, r_dot);
    double cn = norm(c);
    if (cn <= 0.0)
        throw std::domain_error("cartesian_to_keplerian: rectilinear orbit");

    KeplerianElements el;
    el.epoch = epoch;
    el.a = -mu / energy2;
    double one_m_e2 = cn * cn / (mu * el.a);
    el.e = std::sqrt(std::max(0.0, 1.0 - one_m_e2));

    Vec3 c_hat = c / cn;
    el.inc = std::acos(std::clamp(c_hat.z, -1.0, 1.0));
    Vec3 node{-c.y, c.x, 0.0}; // z_hat x c
    double nn = norm(node);
    if (nn < 1e-12 * cn) {
        // equatorial orbit: node undefined, fold it into omega
        node = {1.0, 0.0, 0.0};
        el.Omega = 0.0;
    } else {
        node = node / nn;
        el.Omega = wrap_two_pi(std::atan2(c_hat.x, -c_hat.y));
    }

    // Lenz vector
    Vec3 evec = cross(r_dot, c) / mu - r / rn;
    if (el.e < 1e-14) {
        el.omega = 0.0;
        evec = node; // measure anomaly from the node
    } else {
        el.omega = wrap_two_pi(std::atan2(dot(cross(node, evec), c_hat), dot(node, evec)));
    }

    double esinE = dot(r, r_dot) / (constants::k_gauss * std::sqrt(el.a));
    double ecosE = 1.0 - rn / el.a;
    double E = std::atan2(esinE, ecosE);
    el.ell = wrap_two_pi(E - esinE);
    return el;
}

// Two-body propagation of elliptic elements to time t.
inline void keplerian_to_cartesian(const KeplerianElements& el, Epoch t, Vec3& r,
                                   Vec3& r_dot) {
    if (el.e < 0.0 || el.e >= 1.0 || el.a <= 0.0)
        throw std::domain_error("keplerian_to_cartesian: elliptic elements required");
    const double mu = constants::k_gauss * constants::k_gauss;
    double n = constants::k_gauss * std::pow(el.a, -1.5);
    double ell = el.ell + n * (t.mjd - el.epoch.mjd);
    double E = solve_kepler(ell, el.e);
    double cE = std::cos(E), sE = std::sin(E);
    double b = el.a * std::sqrt(1.0 - el.e * el.e);
    // perifocal coordinates
    double xp = el.a * (cE - el.e);
    double yp = b * sE;
    double rn = el.a * (1.0 - el.e * cE);
    double Edot = std::sqrt(mu / (el.a * el.a * el.a)) * el.a / rn;
    double vxp = -el.a * sE * Edot;
    double vyp = b * cE * Edot;

    double cO = std::cos(el.Omega), sO = std::sin(el.Omega);
    double ci = std::cos(el.inc), si = std::sin(el.inc);
    double co = std::cos(el.omega), so = std::sin(el.omega);
    Vec3 P{cO * co - sO * so * ci, sO * co + cO * so * ci, so * si};
    Vec3 Q{-cO * so - sO * co * ci, -sO * so + cO * co * ci, co * si};
    r = xp * P + yp * Q;
    r_dot = vxp * P + vyp * Q;
}

// Residual angles (delta omega, delta ell) between two orbits sharing
// a, e, I, Omega; the mean anomalies are compared at the same epoch via the
// common mean motion.
inline DeltaPair compatibility_delta(const KeplerianElements& k1, const KeplerianElements& k2,
                                     Epoch t1, Epoch t2) {
    auto rel = [](double x, double y) {
        return std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-12});
    };
    if (rel(k1.a, k2.a) > 1e-9 || std::abs(k1.e - k2.e) > 1e-9 ||
        std::abs(k1.inc - k2.inc) > 1e-9 ||
        std::abs(angle_diff_smooth(k1.Omega, k2.Omega)) > 1e-9)
        throw std::logic_error("compatibility_delta: orbits do not share (a,e,I,Omega)");
    double n = constants::k_gauss * std::pow(k1.a, -1.5);
    DeltaPair d;
    d.d_omega = angle_diff_smooth(k1.omega, k2.omega);
    d.d_ell = angle_diff_smooth(k1.ell, k2.ell + n * (t1.mjd - t2.mjd));
    return d;
}

} // namespace klink
