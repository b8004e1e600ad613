#pragma once

// Per-epoch first-integral coefficients of the Kepler problem, the conic
// section obtained by projecting the angular-momentum equality, the
// degree-24 polynomial from the energy equality, radial-velocity recovery
// and the degenerate-geometry detector.

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <type_traits>

#include "klink/attributable.hpp"
#include "klink/core.hpp"
#include "klink/poly.hpp"

namespace klink {

struct IntegralCoeffs {
    Vec3 D, E, F, G;        // angular-momentum building blocks
    std::array<double, 6> c{}; // energy coefficients c0..c5
    double eta = 0.0;
    MobileBasis basis;
    Vec3 q, q_dot; // observer state at the attributable epoch
    Epoch epoch;
};

inline IntegralCoeffs compute_coeffs(const Attributable& a) {
    IntegralCoeffs ic;
    ic.basis = mobile_basis(a.alpha, a.delta, a.alpha_dot, a.delta_dot);
    ic.eta = ic.basis.eta;
    ic.q = a.q;
    ic.q_dot = a.q_dot;
    ic.epoch = a.epoch;
    const auto& b = ic.basis;
    ic.D = cross(a.q, b.rho_hat);
    ic.E = a.alpha_dot * cross(b.rho_hat, b.rho_hat_alpha) +
           a.delta_dot * cross(b.rho_hat, b.rho_hat_delta);
    ic.F = a.alpha_dot * cross(a.q, b.rho_hat_alpha) +
           a.delta_dot * cross(a.q, b.rho_hat_delta) + cross(b.rho_hat, a.q_dot);
    ic.G = cross(a.q, a.q_dot);
    ic.c[0] = dot(a.q, a.q);
    ic.c[1] = 2.0 * dot(a.q_dot, b.rho_hat);
    ic.c[2] = ic.eta * ic.eta;
    ic.c[3] = 2.0 * (a.alpha_dot * dot(a.q_dot, b.rho_hat_alpha) +
                     a.delta_dot * dot(a.q_dot, b.rho_hat_delta));
    ic.c[4] = dot(a.q_dot, a.q_dot);
    ic.c[5] = 2.0 * dot(a.q, b.rho_hat);
    return ic;
}

// sin of the angle between D1 and D2; near zero the projection on D1 x D2
// is ill-conditioned
inline double parallel_d_measure(const IntegralCoeffs& c1, const IntegralCoeffs& c2) {
    double n1 = norm(c1.D), n2 = norm(c2.D);
    if (n1 == 0.0 || n2 == 0.0) return 0.0;
    return norm(cross(c1.D, c2.D)) / (n1 * n2);
}

template <class R>
struct ConicQT {
    R q20{}, q10{}, q02{}, q01{}, q00{};

    R eval(const R& rho1, const R& rho2) const {
        return q20 * rho1 * rho1 + q10 * rho1 + q02 * rho2 * rho2 + q01 * rho2 + q00;
    }
};

using ConicQ = ConicQT<DdReal>;

template <class R>
ConicQT<R> conic_cast(const ConicQ& c) {
    if constexpr (std::is_same_v<R, DdReal>) return c;
    else
        return {to_double(c.q20), to_double(c.q10), to_double(c.q02),
                to_double(c.q01), to_double(c.q00)};
}

// Coefficients of q(rho1, rho2) = D1 x D2 . J(rho1, rho2)
inline ConicQ build_conic(const IntegralCoeffs& c1, const IntegralCoeffs& c2) {
    Vec3 w = cross(c1.D, c2.D);
    ConicQ q;
    q.q20 = DdReal(-dot(c1.E, w));
    q.q10 = DdReal(-dot(c1.F, w));
    q.q02 = DdReal(dot(c2.E, w));
    q.q01 = DdReal(dot(c2.F, w));
    q.q00 = DdReal(dot(c2.G - c1.G, w));
    return q;
}

// J(rho1, rho2) = E2 rho2^2 - E1 rho1^2 + F2 rho2 - F1 rho1 + G2 - G1
inline Vec3 am_difference(const IntegralCoeffs& c1, const IntegralCoeffs& c2,
                          double rho1, double rho2) {
    return c2.E * (rho2 * rho2) - c1.E * (rho1 * rho1) + c2.F * rho2 - c1.F * rho1 +
           c2.G - c1.G;
}

// radial velocities from the angular-momentum equality, projecting on D1 x D2
inline void radial_velocities(const IntegralCoeffs& c1, const IntegralCoeffs& c2,
                              double rho1, double rho2, double& rho1_dot,
                              double& rho2_dot) {
    Vec3 w = cross(c1.D, c2.D);
    double w2 = dot(w, w);
    if (w2 == 0.0) throw std::domain_error("radial_velocities: D1 x D2 vanishes");
    Vec3 j = am_difference(c1, c2, rho1, rho2);
    rho1_dot = dot(cross(j, c2.D), w) / w2;
    rho2_dot = dot(cross(j, c1.D), w) / w2;
}

namespace detail {

// scalar polynomial J . u over the common denominator |D1 x D2|^2;
// quadratic in (rho1, rho2)
template <class R>
BivariatePoly<R> rhodot_poly(const IntegralCoeffs& c1, const IntegralCoeffs& c2,
                             const Vec3& u, double w2) {
    BivariatePoly<R> p(2, 2);
    auto put = [&](int i, int j, double v) { p.at(i, j) = num_traits<R>::from_double(v) / num_traits<R>::from_double(w2); };
    put(0, 2, dot(c2.E, u));
    put(2, 0, -dot(c1.E, u));
    put(0, 1, dot(c2.F, u));
    put(1, 0, -dot(c1.F, u));
    put(0, 0, dot(c2.G - c1.G, u));
    return p;
}

} // namespace detail

// F_i(rho1, rho2) of degree 4 and G_i(rho_i) of degree 2 entering the energy
// equality; var = 0 builds for epoch 1 (univariate pieces in rho1).
template <class R>
struct EnergyPieces {
    BivariatePoly<R> f1, f2; // degree 4
    BivariatePoly<R> g1, g2; // degree 2, univariate
};

template <class R>
EnergyPieces<R> energy_pieces(const IntegralCoeffs& c1, const IntegralCoeffs& c2) {
    Vec3 w = cross(c1.D, c2.D);
    double w2 = dot(w, w);
    if (w2 == 0.0) throw std::domain_error("energy_pieces: D1 x D2 vanishes");
    auto rd1 = detail::rhodot_poly<R>(c1, c2, cross(c2.D, w), w2);
    auto rd2 = detail::rhodot_poly<R>(c1, c2, cross(c1.D, w), w2);

    auto fd = [](double v) { return num_traits<R>::from_double(v); };
    EnergyPieces<R> ep;
    auto make_f = [&](const BivariatePoly<R>& rd, const IntegralCoeffs& c, int var) {
        BivariatePoly<R> f = rd * rd + fd(c.c[1]) * rd;
        BivariatePoly<R> rest(2, 2);
        if (var == 0) {
            rest.at(2, 0) = fd(c.c[2]);
            rest.at(1, 0) = fd(c.c[3]);
        } else {
            rest.at(0, 2) = fd(c.c[2]);
            rest.at(0, 1) = fd(c.c[3]);
        }
        rest.at(0, 0) = fd(c.c[4]);
        return f + rest;
    };
    ep.f1 = make_f(rd1, c1, 0);
    ep.f2 = make_f(rd2, c2, 1);

    BivariatePoly<R> g1(2, 0), g2(0, 2);
    g1.at(2, 0) = fd(1.0);
    g1.at(1, 0) = fd(c1.c[5]);
    g1.at(0, 0) = fd(c1.c[0]);
    g2.at(0, 2) = fd(1.0);
    g2.at(0, 1) = fd(c2.c[5]);
    g2.at(0, 0) = fd(c2.c[0]);
    ep.g1 = g1;
    ep.g2 = g2;
    return ep;
}

// p(rho1, rho2) = [(F1-F2)^2 G1 G2 - 4 k^4 (G1+G2)]^2 - 64 k^8 G1 G2,
// total degree 24
template <class R>
BivariatePoly<R> build_p(const IntegralCoeffs& c1, const IntegralCoeffs& c2) {
    auto ep = energy_pieces<R>(c1, c2);
    auto fd = [](double v) { return num_traits<R>::from_double(v); };
    R k2 = fd(constants::k_gauss) * fd(constants::k_gauss);
    R k4 = k2 * k2;
    R k8 = k4 * k4;
    BivariatePoly<R> df = ep.f1 - ep.f2;
    BivariatePoly<R> g1g2 = ep.g1 * ep.g2;
    BivariatePoly<R> inner = df * df * g1g2 - (fd(4.0) * k4) * (ep.g1 + ep.g2);
    return inner * inner - (fd(64.0) * k8) * g1g2;
}

struct EnergyResiduals {
    double raw = 0.0;           // normalized residual of the unsquared equality
    double first_squared = 0.0; // normalized residual of the once-squared equality
    bool unphysical = false;    // some G_i(rho_i) <= 0
};

// Residuals of the pre-squaring energy identities at a candidate solution;
// both must vanish for a non-spurious root.  Residuals are normalized by the
// largest participating term magnitude.
inline EnergyResiduals energy_residuals(const IntegralCoeffs& c1, const IntegralCoeffs& c2,
                                        double rho1, double rho2, double rho1_dot,
                                        double rho2_dot) {
    auto fval = [](const IntegralCoeffs& c, double rho, double rho_dot) {
        return rho_dot * rho_dot + c.c[1] * rho_dot + c.c[2] * rho * rho + c.c[3] * rho +
               c.c[4];
    };
    double g1 = rho1 * rho1 + c1.c[5] * rho1 + c1.c[0];
    double g2 = rho2 * rho2 + c2.c[5] * rho2 + c2.c[0];
    EnergyResiduals r;
    if (g1 <= 0.0 || g2 <= 0.0) {
        r.unphysical = true;
        r.raw = r.first_squared = std::numeric_limits<double>::infinity();
        return r;
    }
    double k2 = constants::k_gauss * constants::k_gauss;
    double k4 = k2 * k2;
    double f1 = fval(c1, rho1, rho1_dot), f2 = fval(c2, rho2, rho2_dot);
    double t1 = 2.0 * k2 / std::sqrt(g1), t2 = 2.0 * k2 / std::sqrt(g2);
    double scale_raw = std::max({std::abs(f1), std::abs(f2), t1, t2});
    r.raw = ((f1 - t1) - (f2 - t2)) / scale_raw;

    double a = (f1 - f2) * (f1 - f2) * g1 * g2;
    double b = 4.0 * k4 * (g1 + g2);
    double c = 8.0 * k4 * std::sqrt(g1 * g2);
    double scale_sq = std::max({std::abs(a), b, c});
    r.first_squared = (a - b + c) / scale_sq;
    return r;
}

enum class DegeneracyKind { None, C0, C1, C2, C3, C4, ZeroProperMotion, ParallelD };

struct Degeneracy {
    DegeneracyKind kind = DegeneracyKind::None;
    // normalized scalar tests: |n12|, |n1.q1|, |n2.q2|, |n12.q1|, |n12.q2|
    double n12 = 0.0, n1q1 = 0.0, n2q2 = 0.0, n12q1 = 0.0, n12q2 = 0.0;
    double parallel_d = 0.0;

    std::string name() const {
        switch (kind) {
            case DegeneracyKind::None: return "None";
            case DegeneracyKind::C0: return "C0";
            case DegeneracyKind::C1: return "C1";
            case DegeneracyKind::C2: return "C2";
            case DegeneracyKind::C3: return "C3";
            case DegeneracyKind::C4: return "C4";
            case DegeneracyKind::ZeroProperMotion: return "ZeroProperMotion";
            case DegeneracyKind::ParallelD: return "ParallelD";
        }
        return "?";
    }
};

// Conditions (C0)-(C4) under which the conic degenerates, plus the two
// practical failure modes (vanishing proper motion, parallel D vectors).
inline Degeneracy check_degeneracy(const IntegralCoeffs& c1, const IntegralCoeffs& c2,
                                   double tol = 1e-6) {
    Degeneracy d;
    Vec3 n12 = cross(c1.basis.rho_hat, c2.basis.rho_hat);
    d.n12 = norm(n12);
    double nq1 = std::max(norm(c1.q), 1e-30), nq2 = std::max(norm(c2.q), 1e-30);
    d.n1q1 = std::abs(dot(c1.basis.n_hat, c1.q)) / nq1;
    d.n2q2 = std::abs(dot(c2.basis.n_hat, c2.q)) / nq2;
    double nn12 = std::max(d.n12, 1e-30);
    d.n12q1 = std::abs(dot(n12, c1.q)) / (nn12 * nq1);
    d.n12q2 = std::abs(dot(n12, c2.q)) / (nn12 * nq2);
    d.parallel_d = parallel_d_measure(c1, c2);

    if (c1.eta < tol || c2.eta < tol)
        d.kind = DegeneracyKind::ZeroProperMotion;
    else if (d.n12 < tol)
        d.kind = DegeneracyKind::C0;
    else if (d.n1q1 < tol && d.n2q2 < tol)
        d.kind = DegeneracyKind::C1;
    else if (d.n12q1 < tol && d.n12q2 < tol)
        d.kind = DegeneracyKind::C2;
    else if (d.n1q1 < tol && d.n12q1 < tol)
        d.kind = DegeneracyKind::C3;
    else if (d.n2q2 < tol && d.n12q2 < tol)
        d.kind = DegeneracyKind::C4;
    else if (d.parallel_d < 1e-8)
        d.kind = DegeneracyKind::ParallelD;
    return d;
}

} // namespace klink
