#pragma once

// End-to-end linkage of two attributables: build the (p, conic) system,
// solve with either root engine, reject spurious candidates, recover radial
// velocities, correct epochs for aberration, convert to ecliptic Keplerian
// element pairs, evaluate the compatibility discrepancy and its covariance,
// and keep the solutions passing the chi-square control.

#include <Eigen/Dense>
#include <algorithm>
#include <string>
#include <vector>

#include "klink/attributable.hpp"
#include "klink/covariance.hpp"
#include "klink/dd.hpp"
#include "klink/elements.hpp"
#include "klink/integrals.hpp"
#include "klink/polysolve.hpp"

namespace klink {

enum class LinkEngine { DFT_Resultant, NormalForm, Both };

struct LinkageConfig {
    LinkEngine engine = LinkEngine::Both;
    double rho_min = 0.02;        // AU
    double spurious_tol = 1e-6;   // normalized energy-equality residuals
    double imag_tol = 0.5;        // passed through to the root engines
    double chi_max = 10.0;        // ||Delta||* acceptance threshold
    bool extended_precision = true; // double-double system build and solve
};

struct LinkageSolution {
    double rho1 = 0.0, rho1_dot = 0.0, rho2 = 0.0, rho2_dot = 0.0;
    KeplerianElements elements1, elements2; // ecliptic J2000
    Epoch t_tilde1, t_tilde2;               // aberration-corrected epochs
    DeltaPair delta;
    double norm = 0.0; // ||Delta||*
    Eigen::Matrix<double, 8, 8> covariance = Eigen::Matrix<double, 8, 8>::Zero();
    std::string provenance; // which engine(s) produced the root
    double condition = 0.0; // of dPhi/dR at the solution
};

struct LinkageDiagnostics {
    Degeneracy degeneracy;
    int candidate_count = 0; // certified roots before filtering
    bool converged = true;
    std::vector<std::string> rejected; // audit log, one line per dropped candidate
};

struct LinkageResult {
    std::vector<LinkageSolution> solutions;
    LinkageDiagnostics diag;
};

namespace detail {

struct TaggedRoot {
    CandidateRoot root;
    std::string provenance;
};

template <class R>
std::vector<TaggedRoot> linkage_candidates(const IntegralCoeffs& c1,
                                           const IntegralCoeffs& c2,
                                           const LinkageConfig& cfg,
                                           LinkageDiagnostics& diag) {
    auto p = build_p<R>(c1, c2);
    auto qr = conic_cast<R>(build_conic(c1, c2));
    SolveOptions opt;
    // let near-zero roots surface from the solver so the rho_min rejection
    // is visible in the audit log instead of silently culled
    opt.rho_min = std::min(cfg.rho_min, 1e-3);
    opt.imag_tol = cfg.imag_tol;

    std::vector<TaggedRoot> out;
    auto add = [&](const SystemSolution<R>& sol, const char* tag) {
        diag.converged = diag.converged && sol.converged;
        for (const auto& r : sol.roots) {
            bool dup = false;
            for (auto& t : out) {
                if (std::abs(t.root.rho1 - r.rho1) < 1e-6 &&
                    std::abs(t.root.rho2 - r.rho2) < 1e-6) {
                    t.provenance = "both";
                    dup = true;
                    break;
                }
            }
            if (!dup) out.push_back({r, tag});
        }
    };
    if (cfg.engine != LinkEngine::NormalForm) add(solve_system_dft(p, qr, opt), "dft");
    if (cfg.engine != LinkEngine::DFT_Resultant)
        add(solve_system_normal_form(p, qr, opt), "nf");
    return out;
}

// Final root refinement on the exact pair {conic (angular-momentum
// equation), unsquared energy equality}.  Unlike the degree-24 polynomial,
// whose evaluation near a root cancels ~24 decades and leaves a ~1e-7 AU
// band where it sits below the extended-precision noise floor, these two
// functions evaluate without structural cancellation, so a plain 2x2 Newton
// localizes the root to machine precision.
inline void refine_root(const IntegralCoeffs& c1, const IntegralCoeffs& c2,
                        const ConicQ& conic, double& rho1, double& rho2) {
    auto g = [&](double x, double y, double& f1, double& f2) -> bool {
        double rd1, rd2;
        radial_velocities(c1, c2, x, y, rd1, rd2);
        auto er = energy_residuals(c1, c2, x, y, rd1, rd2);
        if (er.unphysical) return false;
        f1 = to_double(conic.eval(DdReal(x), DdReal(y)));
        f2 = er.raw;
        return true;
    };
    double x = rho1, y = rho2;
    for (int it = 0; it < 20; ++it) {
        double f1, f2;
        if (!g(x, y, f1, f2)) return;
        double h = 1e-7 * std::max(1.0, std::max(std::abs(x), std::abs(y)));
        double a1, a2, b1, b2, c1v, c2v, d1, d2;
        if (!g(x + h, y, a1, a2) || !g(x - h, y, b1, b2) ||
            !g(x, y + h, c1v, c2v) || !g(x, y - h, d1, d2))
            return;
        double j11 = (a1 - b1) / (2 * h), j12 = (c1v - d1) / (2 * h);
        double j21 = (a2 - b2) / (2 * h), j22 = (c2v - d2) / (2 * h);
        double det = j11 * j22 - j12 * j21;
        if (det == 0.0) return;
        double dx = (f1 * j22 - j12 * f2) / det;
        double dy = (j11 * f2 - f1 * j21) / det;
        // a genuine root sits within the degree-24 localization band; a step
        // escaping it means the 2x2 system is locally degenerate -- keep the
        // certified root instead
        if (std::abs(dx) > 1e-4 || std::abs(dy) > 1e-4) return;
        x -= dx;
        y -= dy;
        if (std::abs(dx) < 1e-13 * std::max(1.0, std::abs(x)) &&
            std::abs(dy) < 1e-13 * std::max(1.0, std::abs(y)))
            break;
    }
    rho1 = x;
    rho2 = y;
}

} // namespace detail

// Elements from one attributable + radial pair, labeled with the
// aberration-corrected epoch.  The light received at t_bar was emitted at
// t_tilde, so the heliocentric position at t_tilde is q(t_bar) + rho rho_hat:
// the observer state of the observation epoch (the interpolated q of the
// attributable fit), not q re-evaluated at t_tilde.
inline KeplerianElements assemble_elements(const Attributable& a, double rho,
                                           double rho_dot, Epoch t_tilde) {
    AttributableElements ae{a.alpha, a.delta, a.alpha_dot, a.delta_dot,
                            rho,     rho_dot, t_tilde};
    Vec3 r, rdot;
    attributable_to_cartesian(ae, a.q, a.q_dot, r, rdot);
    r = equatorial_to_ecliptic(r);
    rdot = equatorial_to_ecliptic(rdot);
    return cartesian_to_keplerian(r, rdot, t_tilde);
}

inline LinkageResult link(const Attributable& a1, const Attributable& a2,
                          const LinkageConfig& cfg = {}) {
    LinkageResult res;
    // compute_coeffs needs the mobile basis, which does not exist at zero
    // proper motion; report the degeneracy instead of propagating the throw
    auto eta = [](const Attributable& a) {
        return std::hypot(a.alpha_dot * std::cos(a.delta), a.delta_dot);
    };
    if (eta(a1) < 1e-6 || eta(a2) < 1e-6) {
        res.diag.degeneracy.kind = DegeneracyKind::ZeroProperMotion;
        return res;
    }
    auto c1 = compute_coeffs(a1), c2 = compute_coeffs(a2);
    res.diag.degeneracy = check_degeneracy(c1, c2);
    if (res.diag.degeneracy.kind != DegeneracyKind::None) return res;
    auto conic = build_conic(c1, c2);

    std::vector<detail::TaggedRoot> cands =
        cfg.extended_precision
            ? detail::linkage_candidates<DdReal>(c1, c2, cfg, res.diag)
            : detail::linkage_candidates<double>(c1, c2, cfg, res.diag);
    res.diag.candidate_count = int(cands.size());

    auto reject = [&](const CandidateRoot& r, const std::string& why) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "(%.6f, %.6f): ", r.rho1, r.rho2);
        res.diag.rejected.push_back(buf + why);
    };

    for (const auto& tr : cands) {
        const auto& r = tr.root;
        if (r.rho1 <= cfg.rho_min || r.rho2 <= cfg.rho_min) {
            reject(r, "below rho_min");
            continue;
        }
        double rd1, rd2;
        radial_velocities(c1, c2, r.rho1, r.rho2, rd1, rd2);
        auto er = energy_residuals(c1, c2, r.rho1, r.rho2, rd1, rd2);
        if (er.unphysical) {
            reject(r, "unphysical sqrt domain");
            continue;
        }
        // a root violating the once-squared equality also violates the
        // unsquared one, so classify by the stronger condition first
        if (std::abs(er.first_squared) > cfg.spurious_tol) {
            reject(r, "spurious: violates once-squared energy equality");
            continue;
        }
        if (std::abs(er.raw) > cfg.spurious_tol) {
            reject(r, "spurious: violates unsquared energy equality (sign branch)");
            continue;
        }

        double rho1 = r.rho1, rho2 = r.rho2;
        detail::refine_root(c1, c2, conic, rho1, rho2);
        radial_velocities(c1, c2, rho1, rho2, rd1, rd2);

        LinkageSolution s;
        s.rho1 = rho1;
        s.rho2 = rho2;
        s.rho1_dot = rd1;
        s.rho2_dot = rd2;
        s.t_tilde1 = {a1.epoch.mjd - rho1 / constants::c_light};
        s.t_tilde2 = {a2.epoch.mjd - rho2 / constants::c_light};
        s.provenance = tr.provenance;
        try {
            s.elements1 = assemble_elements(a1, rho1, rd1, s.t_tilde1);
            s.elements2 = assemble_elements(a2, rho2, rd2, s.t_tilde2);
            s.delta = compatibility_delta(s.elements1, s.elements2, s.t_tilde1,
                                          s.t_tilde2);
        } catch (const NonEllipticError&) {
            reject(r, "nonnegative two-body energy");
            continue;
        } catch (const std::logic_error&) {
            reject(r, "element pair does not share (a,e,I,Omega)");
            continue;
        }

        Eigen::Vector4d R{rho1, rd1, rho2, rd2};
        auto sj = solution_jacobian(a1, a2, R);
        s.condition = sj.condition;
        if (sj.degenerate) {
            reject(r, "degenerate Phi Jacobian");
            continue;
        }
        auto dj = delta_jacobians(a1, a2, R, sj.dR_dA, true, true);
        auto psi = propagate(a1.gamma, a2.gamma, sj.dR_dA, dj.dDelta_dA);
        s.covariance = psi.gamma_psi;
        try {
            s.norm = identification_norm(s.delta, psi.gamma_delta());
        } catch (const std::domain_error&) {
            reject(r, "singular Gamma_Delta");
            continue;
        }
        if (s.norm * s.norm > cfg.chi_max * cfg.chi_max) {
            reject(r, "norm above chi_max");
            continue;
        }
        res.solutions.push_back(std::move(s));
    }
    std::sort(res.solutions.begin(), res.solutions.end(),
              [](const LinkageSolution& x, const LinkageSolution& y) {
                  return x.norm < y.norm;
              });
    return res;
}

} // namespace klink
