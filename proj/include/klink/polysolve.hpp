#pragma once

// Solvers for the bivariate system {p(rho1, rho2) = 0, q(rho1, rho2) = 0}:
// a resultant engine (Sylvester determinants sampled at roots of unity,
// interpolated by an inverse DFT, Aberth root finding) and an independent
// normal-form engine (affine + rotation change of variables reducing the
// conic to xi1 xi2 = c_star, then a single degree-48 polynomial).

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "klink/integrals.hpp"
#include "klink/poly.hpp"

namespace klink {

struct CandidateRoot {
    double rho1 = 0.0, rho2 = 0.0;
    double p_residual = 0.0; // |p| relative to its term envelope
    double q_residual = 0.0; // |q| relative to its term envelope
    double root_error = 0.0; // error bound reported by the root finder
};

template <class R>
struct SystemSolution {
    std::vector<CandidateRoot> roots;
    int raw_root_count = 0;      // complex roots of the eliminant
    double pivot_growth = 0.0;   // worst pivot growth over the DFT samples
    bool converged = true;
};

namespace detail {

template <class R>
R envelope(const BivariatePoly<R>& p, const R& x, const R& y) {
    using std::abs;
    R ax = abs(x), ay = abs(y), env(0.0), xi(1.0);
    for (int i = 0; i <= p.n1; ++i) {
        R yj(1.0);
        for (int j = 0; j <= p.n2; ++j) {
            env += abs(p.at(i, j)) * xi * yj;
            yj *= ay;
        }
        xi *= ax;
    }
    return env;
}

template <class R>
R conic_envelope(const ConicQT<R>& q, const R& x, const R& y) {
    using std::abs;
    return abs(q.q20) * x * x + abs(q.q10) * abs(x) + abs(q.q02) * y * y +
           abs(q.q01) * abs(y) + abs(q.q00);
}

// Newton iteration on the pair (p, q).  The eliminant representations are
// ill-conditioned (their evaluation cancels many orders), so root candidates
// only serve as starting points: a root is certified here, where p and q are
// evaluated directly by Horner without structural cancellation.  Certification
// requires the Newton steps to have converged, not just a small residual --
// stalled iterations near ill-determined clusters are rejected.
template <class R>
bool polish_root(const BivariatePoly<R>& p, const ConicQT<R>& q, R& x, R& y,
                 CandidateRoot& out, double residual_tol) {
    using std::abs;
    // Converged Newton steps bottom out at eps times the local conditioning
    // of the Jacobian solve, well above eps itself; stalled iterations near
    // ill-determined clusters sit many orders higher, so eps^(1/3) separates
    // the two regimes with a wide margin either way.
    const double step_tol = std::pow(num_traits<R>::eps, 1.0 / 3.0);
    bool step_converged = false;
    int extra = 2; // refinement iterations after the step test first passes
    for (int it = 0; it < 140; ++it) {
        R pv = p.eval(x, y);
        R qv = q.eval(x, y);
        R a = p.eval_dx(x, y), b = p.eval_dy(x, y);
        R c = R(2.0) * q.q20 * x + q.q10;
        R d = R(2.0) * q.q02 * y + q.q01;
        R det = a * d - b * c;
        if (to_double(abs(det)) == 0.0) break;
        R dx = (pv * d - qv * b) / det;
        R dy = (a * qv - c * pv) / det;
        x -= dx;
        y -= dy;
        double step = std::max(to_double(abs(dx)), to_double(abs(dy)));
        double sc = std::max({1.0, std::abs(to_double(x)), std::abs(to_double(y))});
        if (step <= step_tol * sc) {
            step_converged = true;
            if (extra-- == 0) break;
        }
    }
    double penv = std::max(to_double(envelope(p, x, y)), 1e-300);
    double qenv = std::max(to_double(conic_envelope(q, x, y)), 1e-300);
    out.rho1 = to_double(x);
    out.rho2 = to_double(y);
    out.p_residual = std::abs(to_double(p.eval(x, y))) / penv;
    out.q_residual = std::abs(to_double(q.eval(x, y))) / qenv;
    return step_converged && out.p_residual < residual_tol &&
           out.q_residual < residual_tol;
}

inline void dedup_roots(std::vector<CandidateRoot>& v, double tol = 1e-6) {
    std::sort(v.begin(), v.end(), [](const CandidateRoot& a, const CandidateRoot& b) {
        return a.rho2 != b.rho2 ? a.rho2 < b.rho2 : a.rho1 < b.rho1;
    });
    std::vector<CandidateRoot> out;
    for (auto& r : v) {
        bool dup = false;
        for (auto& o : out) {
            double sc = std::max({1.0, std::abs(r.rho1), std::abs(r.rho2)});
            if (std::abs(r.rho1 - o.rho1) < tol * sc &&
                std::abs(r.rho2 - o.rho2) < tol * sc) {
                dup = true;
                if (r.p_residual < o.p_residual) o = r;
                break;
            }
        }
        if (!dup) out.push_back(r);
    }
    v = std::move(out);
}

// Tightly clustered roots sit on the conic a few 1e-3 apart and an eliminant
// often resolves only some of them.  Certified neighbours predict the missing
// ones by linear extrapolation and interpolation along the cluster; the
// Newton polish accepts or rejects each guess, so this only ever adds genuine
// roots.
template <class R>
void complete_clusters(const BivariatePoly<R>& p, const ConicQT<R>& q,
                       std::vector<CandidateRoot>& roots, double rho_min,
                       double residual_tol) {
    for (int round = 0; round < 2; ++round) {
        std::vector<std::pair<double, double>> seeds;
        for (size_t i = 0; i < roots.size(); ++i)
            for (size_t j = i + 1; j < roots.size(); ++j) {
                const auto &a = roots[i], &b = roots[j];
                double sc = std::max({1.0, std::abs(a.rho1), std::abs(a.rho2)});
                double d1 = b.rho1 - a.rho1, d2 = b.rho2 - a.rho2;
                if (std::hypot(d1, d2) > 0.05 * sc) continue;
                seeds.emplace_back(a.rho1 - d1, a.rho2 - d2);
                seeds.emplace_back(b.rho1 + d1, b.rho2 + d2);
                seeds.emplace_back(a.rho1 + 0.5 * d1, a.rho2 + 0.5 * d2);
            }
        size_t before = roots.size();
        for (auto& s : seeds) {
            if (s.first <= rho_min || s.second <= rho_min) continue;
            R x = num_traits<R>::from_double(s.first);
            R y = num_traits<R>::from_double(s.second);
            CandidateRoot cr;
            if (!polish_root(p, q, x, y, cr, residual_tol)) continue;
            if (cr.rho1 <= rho_min || cr.rho2 <= rho_min) continue;
            roots.push_back(cr);
        }
        dedup_roots(roots);
        if (roots.size() == before) break;
    }
}

} // namespace detail

struct SolveOptions {
    double rho_min = 1e-4;      // AU, smallest admissible topocentric distance
    double imag_tol = 0.5;      // relative window for considering a complex
                                // candidate; generous because the eliminant
                                // representations blur roots -- the Newton
                                // polish on (p, q) is the rigorous acceptance
    double residual_tol = 1e-8; // envelope-relative residual after polishing
    int dft_size = 64;
};

// ---------------------------------------------------------------------------
// resultant engine

namespace detail {

// One interpolation pass for Res_{rho1}(p, q) with rho2 sampled on a circle of
// radius s (substituting rho2 = s t and sampling t at roots of unity).  The
// returned coefficients are already expressed in the unscaled variable.
// det_max reports the largest |det| on the circle: the interpolated
// coefficient of rho2^j carries an absolute error of order eps * det_max / s^j,
// which is why a single radius cannot serve coefficients whose magnitudes span
// many orders -- the caller merges passes at different radii.
template <class R>
UnivariatePoly<R> resultant_pass(const BivariatePoly<R>& p, const ConicQT<R>& q,
                                 int da, int db, int n, double s,
                                 double& growth, double& det_max) {
    using std::abs;
    const int N = da + db;
    const R sc = num_traits<R>::from_double(s);

    // values of each a_j(s t) at the roots of unity in t
    std::vector<std::vector<Cx<R>>> avals(da + 1);
    for (int j = 0; j <= da; ++j) {
        UnivariatePoly<R> aj;
        aj.coeffs.resize(p.n2 + 1);
        R pw(1.0);
        for (int k = 0; k <= p.n2; ++k) {
            aj.coeffs[k] = (j <= p.n1) ? Cx<R>(p.at(j, k) * pw) : Cx<R>(R(0.0));
            pw *= sc;
        }
        avals[j] = dft_evaluate(aj, n);
    }
    auto w = roots_of_unity<R>(n);

    const R q01s = q.q01 * sc;
    const R q02s = q.q02 * sc * sc;
    std::vector<Cx<R>> dets(n);
    std::vector<Cx<R>> m(static_cast<size_t>(N) * N);
    det_max = 0.0;
    for (int k = 0; k < n; ++k) {
        std::fill(m.begin(), m.end(), Cx<R>(R(0.0)));
        auto at = [&](int r, int c) -> Cx<R>& { return m[r * N + c]; };
        // db rows of p's coefficients in descending order
        for (int r = 0; r < db; ++r)
            for (int j = 0; j <= da; ++j) at(r, r + j) = avals[da - j][k];
        // da rows of the conic's coefficients
        Cx<R> b[3] = {Cx<R>(q.q00) + (Cx<R>(q01s) + Cx<R>(q02s) * w[k]) * w[k],
                      Cx<R>(q.q10), Cx<R>(q.q20)};
        for (int r = 0; r < da; ++r)
            for (int j = 0; j <= db; ++j) at(db + r, r + j) = b[db - j];
        auto d = lu_determinant(m, N);
        dets[k] = d.det;
        det_max = std::max(det_max, to_double(abs(d.det)));
        growth = std::max(growth, d.pivot_growth);
    }
    auto res = idft_interpolate(dets);
    // Res(rho2) = Res_scaled(t) with t = rho2 / s, so c_j = c~_j / s^j
    if (s != 1.0) {
        R inv = R(1.0) / sc;
        R f(1.0);
        for (auto& c : res.coeffs) {
            c = c * Cx<R>(f);
            f *= inv;
        }
    }
    return res;
}

} // namespace detail

// Res_{rho1}(p, q) as a univariate polynomial in rho2, computed from Sylvester
// determinants sampled on circles in the rho2 plane and interpolated by an
// inverse DFT.  The degree never exceeds deg(p) * deg(q) = 48.  Two radii are
// used when the coefficient profile decays steeply: the unit circle resolves
// the low-order coefficients and a larger circle (matched to the decay rate,
// i.e. to the radius of the large roots) resolves the high-order ones; the
// passes are merged per coefficient by the smaller expected error.
template <class R>
UnivariatePoly<R> resultant_rho1(const BivariatePoly<R>& p, const ConicQT<R>& q,
                                 double* pivot_growth = nullptr, int n = 64) {
    using std::abs;
    // effective degrees (trim identically-tiny leading rows)
    double pmax = 0.0;
    for (auto& v : p.c) pmax = std::max(pmax, std::abs(to_double(v)));
    int da = 0;
    for (int i = p.n1; i >= 1; --i) {
        bool nz = false;
        for (int j = 0; j <= p.n2; ++j)
            if (std::abs(to_double(p.at(i, j))) > 1e-20 * pmax) nz = true;
        if (nz) { da = i; break; }
    }
    double qmax = std::max({std::abs(to_double(q.q20)), std::abs(to_double(q.q10)),
                            std::abs(to_double(q.q02)), std::abs(to_double(q.q01)),
                            std::abs(to_double(q.q00))});
    int db = std::abs(to_double(q.q20)) > 1e-20 * qmax ? 2
             : std::abs(to_double(q.q10)) > 1e-20 * qmax ? 1
                                                         : 0;
    if (da < 1 || db < 1)
        throw std::domain_error("resultant_rho1: degenerate system");

    // Bezout bound on the genuine degree in rho2.  The Sylvester determinant
    // of the rounded inputs carries tiny coefficients above it (the generic
    // bound for these row degrees is larger), which must be cut structurally:
    // they are consistent across sampling radii, so no noise floor sees them.
    const int jcap = p.total_degree(1e-20) * (db >= 2 ? 2 : db);

    // observed relative noise floor of the interpolated coefficients: the LU
    // and DFT roundoff accumulate to a few orders above eps, so genuine
    // coefficients are only those comfortably over eps * det_max
    const double noise_rel = num_traits<R>::eps * 1e7;

    double g1 = 0.0, m1 = 0.0;
    auto r1 = detail::resultant_pass(p, q, da, db, n, 1.0, g1, m1);

    // decay rate of the genuine high-order coefficients -> radius of the
    // outermost roots; genuine means above the unit-circle noise floor.  The
    // log-coefficient profile is concave, so the secant from the maximum
    // underestimates the outermost radius: a second circle at s^2 covers the
    // far roots while the one at s covers the mid range.
    double cmax = r1.max_coeff_mag();
    int jmax = 0, jhi = -1;
    for (size_t j = 0; j < r1.coeffs.size(); ++j) {
        double a = to_double(abs(r1.coeffs[j]));
        if (a > to_double(abs(r1.coeffs[jmax]))) jmax = static_cast<int>(j);
        if (a > 10.0 * noise_rel * cmax) jhi = static_cast<int>(j);
    }
    double s = 1.0;
    if (jhi > jmax) {
        double chi = to_double(abs(r1.coeffs[jhi]));
        s = std::pow(cmax / chi, 1.0 / (jhi - jmax));
        s = std::clamp(s, 1.0, 64.0);
    }

    UnivariatePoly<R> res;
    double growth = g1;
    if (s > 1.25) {
        std::vector<UnivariatePoly<R>> passes;
        std::vector<double> radii = {1.0, s};
        if (std::min(s * s, 64.0) > 1.25 * s) radii.push_back(std::min(s * s, 64.0));
        std::vector<double> det_maxes = {m1};
        passes.push_back(std::move(r1));
        for (size_t k = 1; k < radii.size(); ++k) {
            double g = 0.0, m = 0.0;
            passes.push_back(detail::resultant_pass(p, q, da, db, n, radii[k], g, m));
            det_maxes.push_back(m);
            growth = std::max(growth, g);
        }
        size_t len = 0;
        for (auto& ps : passes) len = std::max(len, ps.coeffs.size());
        len = std::min(len, static_cast<size_t>(jcap) + 1);
        res.coeffs.assign(len, Cx<R>(R(0.0)));
        const Cx<R> zero(R(0.0));
        std::vector<double> floor_abs(len);
        for (size_t j = 0; j < len; ++j) {
            double best_err = 0.0;
            for (size_t k = 0; k < passes.size(); ++k) {
                double e = det_maxes[k] / std::pow(radii[k], static_cast<double>(j));
                if (k == 0 || e < best_err) {
                    best_err = e;
                    res.coeffs[j] =
                        j < passes[k].coeffs.size() ? passes[k].coeffs[j] : zero;
                }
            }
            floor_abs[j] = noise_rel * best_err;
        }
        // drop leading coefficients indistinguishable from interpolation noise
        while (res.coeffs.size() > 1 &&
               to_double(abs(res.coeffs.back())) <=
                   floor_abs[res.coeffs.size() - 1])
            res.coeffs.pop_back();
    } else {
        res = std::move(r1);
        if (res.coeffs.size() > static_cast<size_t>(jcap) + 1)
            res.coeffs.resize(jcap + 1);
        res.trim(noise_rel);
    }
    if (pivot_growth) *pivot_growth = growth;
    return res;
}

namespace detail {

template <class R>
BivariatePoly<R> transpose(const BivariatePoly<R>& p) {
    BivariatePoly<R> t(p.n2, p.n1);
    for (int i = 0; i <= p.n1; ++i)
        for (int j = 0; j <= p.n2; ++j) t.at(j, i) = p.at(i, j);
    return t;
}

template <class R>
ConicQT<R> transpose(const ConicQT<R>& q) {
    return {q.q02, q.q01, q.q20, q.q10, q.q00};
}

} // namespace detail

// Roots of the system via the rho2 eliminant; rho1 recovered from the conic
// (both quadratic branches are tried) and both coordinates polished by a 2D
// Newton iteration, which is the actual acceptance test.
template <class R>
SystemSolution<R> solve_system_dft_one(const BivariatePoly<R>& p,
                                       const ConicQT<R>& q,
                                       const SolveOptions& opt = {}) {
    using std::abs;
    using std::sqrt;
    SystemSolution<R> sol;
    auto res = resultant_rho1(p, q, &sol.pivot_growth, opt.dft_size);
    auto rs = find_roots(res);
    sol.converged = rs.converged;
    sol.raw_root_count = static_cast<int>(rs.roots.size());

    for (size_t i = 0; i < rs.roots.size(); ++i) {
        double re = to_double(rs.roots[i].re), im = to_double(rs.roots[i].im);
        if (std::abs(im) > opt.imag_tol * std::max(1.0, std::abs(re))) continue;
        // an unresolved real pair can surface as a conjugate pair centered
        // between the true roots, so seed starts at re and re -+ |im| as well
        double ys[3] = {re, re - std::abs(im), re + std::abs(im)};
        int ny = im == 0.0 ? 1 : 3;
        for (int k = 0; k < ny; ++k) {
            if (ys[k] <= opt.rho_min) continue;
            R y(ys[k]);
            // quadratic in rho1 at this rho2; a slightly negative discriminant
            // still yields the tangency point as a polishing start
            R b0 = q.q02 * y * y + q.q01 * y + q.q00;
            R disc = q.q10 * q.q10 - R(4.0) * q.q20 * b0;
            R sq = to_double(disc) > 0.0 ? sqrt(disc) : R(0.0);
            R den = R(2.0) * q.q20;
            R cand[2] = {(-q.q10 + sq) / den, (-q.q10 - sq) / den};
            // polish from both conic branches; duplicates are merged afterwards
            for (int c = 0; c < 2; ++c) {
                if (to_double(cand[c]) <= opt.rho_min) continue;
                R x = cand[c], yy = y;
                CandidateRoot cr;
                cr.root_error = rs.error_bounds[i];
                if (!detail::polish_root(p, q, x, yy, cr, opt.residual_tol)) continue;
                if (cr.rho1 <= opt.rho_min || cr.rho2 <= opt.rho_min) continue;
                sol.roots.push_back(cr);
            }
        }
    }
    detail::dedup_roots(sol.roots);
    return sol;
}

// The eliminant in either variable blurs whichever roots happen to cluster in
// that projection, so run both orientations (eliminating rho1 and rho2) and
// merge the certified roots.
template <class R>
SystemSolution<R> solve_system_dft(const BivariatePoly<R>& p, const ConicQT<R>& q,
                                   const SolveOptions& opt = {}) {
    auto sol = solve_system_dft_one(p, q, opt);
    auto alt = solve_system_dft_one(detail::transpose(p), detail::transpose(q), opt);
    for (auto& r : alt.roots) {
        std::swap(r.rho1, r.rho2);
        sol.roots.push_back(r);
    }
    sol.pivot_growth = std::max(sol.pivot_growth, alt.pivot_growth);
    sol.converged = sol.converged && alt.converged;
    detail::dedup_roots(sol.roots);
    detail::complete_clusters(p, q, sol.roots, opt.rho_min, opt.residual_tol);
    return sol;
}

// ---------------------------------------------------------------------------
// normal-form engine

// Change of variables: translate to the conic's center, scale so the conic
// becomes zeta1^2 - zeta2^2 = const (complex scale when the signs agree),
// rotate 45 degrees to xi1 xi2 = c_star, then eliminate xi1 = c_star / xi2.
template <class R>
struct NormalFormData {
    Cx<R> alpha, beta, gamma, sigma1, sigma2, c_star;
    std::vector<std::vector<Cx<R>>> ps; // p in xi coordinates, ps[i][j] xi1^i xi2^j
    UnivariatePoly<R> u;                // xi2^(n1+n2) * p(c_star/xi2, xi2)
    int dt = 0;

    // inverse change of variables
    void to_rho(const Cx<R>& xi1, const Cx<R>& xi2, Cx<R>& rho1, Cx<R>& rho2) const {
        using std::sqrt;
        R inv_sqrt2 = R(1.0) / sqrt(R(2.0));
        Cx<R> z1 = (xi1 + xi2) * Cx<R>(inv_sqrt2);
        Cx<R> z2 = (xi2 - xi1) * Cx<R>(inv_sqrt2);
        rho1 = sigma1 * z1 + alpha;
        rho2 = sigma2 * z2 + beta;
    }
};

// sigma2_scale <= 0 selects the well-conditioned scale automatically: sigma2
// such that |c_star| = 1, which keeps the xi roots of order one and limits the
// cancellation in the translated coefficients.
template <class R>
NormalFormData<R> normal_form(const BivariatePoly<R>& p, const ConicQT<R>& q,
                              double sigma2_scale = 0.0) {
    using std::abs;
    using std::sqrt;
    using C = Cx<R>;
    double qmax = std::max({std::abs(to_double(q.q20)), std::abs(to_double(q.q10)),
                            std::abs(to_double(q.q02)), std::abs(to_double(q.q01)),
                            std::abs(to_double(q.q00))});
    if (std::abs(to_double(q.q20)) < 1e-12 * qmax ||
        std::abs(to_double(q.q02)) < 1e-12 * qmax)
        throw std::domain_error("solve_system_normal_form: conic not reducible");
    if (sigma2_scale <= 0.0) {
        // c_star = kappa / (2 q02 sigma2^2), so this makes |c_star| = 1
        R kap = q.q00 - q.q10 * q.q10 / (R(4.0) * q.q20) -
                q.q01 * q.q01 / (R(4.0) * q.q02);
        double base = std::abs(to_double(kap / (R(2.0) * q.q02)));
        sigma2_scale = base > 1e-150 ? std::sqrt(base) : 1.0;
    }

    const int n1 = p.n1, n2 = p.n2;
    const int dmax = std::max(n1, n2) + std::max(n1, n2) + 1;
    // binomial table
    std::vector<std::vector<R>> ch(dmax + 1, std::vector<R>(dmax + 1, R(0.0)));
    for (int i = 0; i <= dmax; ++i) {
        ch[i][0] = R(1.0);
        for (int j = 1; j <= i; ++j)
            ch[i][j] = ch[i - 1][j - 1] + ((j <= i - 1) ? ch[i - 1][j] : R(0.0));
    }

    C alpha = C(-q.q10) / C(R(2.0) * q.q20);
    C beta = C(-q.q01) / C(R(2.0) * q.q02);
    C gamma = sqrt(C(-q.q02) / C(q.q20));
    C sigma2 = C(R(sigma2_scale));
    C sigma1 = gamma * sigma2;
    C kappa = C(q.q00) - C(q.q10 * q.q10) / C(R(4.0) * q.q20) -
              C(q.q01 * q.q01) / C(R(4.0) * q.q02);
    C c_star = -kappa / (C(R(2.0) * q.q20) * sigma1 * sigma1);

    // p_tilde = p(sigma1 zeta1 + alpha, sigma2 zeta2 + beta)
    std::vector<std::vector<C>> pt(n1 + 1, std::vector<C>(n2 + 1, C(R(0.0))));
    {
        // powers of alpha, beta
        std::vector<C> ap(n1 + 1), bp(n2 + 1);
        ap[0] = C(R(1.0));
        for (int i = 1; i <= n1; ++i) ap[i] = ap[i - 1] * alpha;
        bp[0] = C(R(1.0));
        for (int j = 1; j <= n2; ++j) bp[j] = bp[j - 1] * beta;
        std::vector<C> s1p(n1 + 1), s2p(n2 + 1);
        s1p[0] = C(R(1.0));
        for (int i = 1; i <= n1; ++i) s1p[i] = s1p[i - 1] * sigma1;
        s2p[0] = C(R(1.0));
        for (int j = 1; j <= n2; ++j) s2p[j] = s2p[j - 1] * sigma2;
        for (int i = 0; i <= n1; ++i)
            for (int j = 0; j <= n2; ++j) {
                C acc(R(0.0));
                for (int h = i; h <= n1; ++h)
                    for (int k = j; k <= n2; ++k) {
                        R pc = p.at(h, k);
                        if (to_double(pc) == 0.0) continue;
                        acc += (ch[h][i] * ch[k][j] * pc) * (ap[h - i] * bp[k - j]);
                    }
                pt[i][j] = s1p[i] * s2p[j] * acc;
            }
    }

    // rotate: zeta1 = (xi1 + xi2)/sqrt2, zeta2 = (xi2 - xi1)/sqrt2
    // (translation and rotation preserve the total degree)
    const int dt = p.total_degree(0.0);
    std::vector<std::vector<C>> ps(dt + 1, std::vector<C>(dt + 1, C(R(0.0))));
    {
        R inv_sqrt2 = R(1.0) / sqrt(R(2.0));
        std::vector<R> pw(dt + 1);
        pw[0] = R(1.0);
        for (int m = 1; m <= dt; ++m) pw[m] = pw[m - 1] * inv_sqrt2;
        for (int h = 0; h <= n1; ++h)
            for (int k = 0; k <= n2; ++k) {
                const C& c = pt[h][k];
                if (to_double(abs(c)) == 0.0) continue;
                int mm = h + k;
                // (xi1+xi2)^h (xi2-xi1)^k
                for (int nidx = 0; nidx <= mm; ++nidx) {
                    R s(0.0);
                    for (int i = std::max(0, nidx - k); i <= std::min(h, nidx); ++i) {
                        R term = ch[h][i] * ch[k][nidx - i];
                        if ((nidx - i) % 2 == 1) s -= term;
                        else s += term;
                    }
                    ps[nidx][mm - nidx] += (s * pw[mm]) * c;
                }
            }
    }

    // restrict to xi1 xi2 = c_star and clear denominators with xi2^dt
    UnivariatePoly<R> u;
    u.coeffs.assign(2 * dt + 1, C(R(0.0)));
    {
        std::vector<C> cp(dt + 1);
        cp[0] = C(R(1.0));
        for (int i = 1; i <= dt; ++i) cp[i] = cp[i - 1] * c_star;
        for (int i = 0; i <= dt; ++i)
            for (int j = 0; j <= dt - i; ++j) {
                // xi1^i xi2^j -> c_star^i xi2^(dt + j - i)
                u.coeffs[dt + j - i] += ps[i][j] * cp[i];
            }
    }
    u.trim(num_traits<R>::eps * 1024.0);

    NormalFormData<R> nf;
    nf.alpha = alpha;
    nf.beta = beta;
    nf.gamma = gamma;
    nf.sigma1 = sigma1;
    nf.sigma2 = sigma2;
    nf.c_star = c_star;
    nf.ps = std::move(ps);
    nf.u = std::move(u);
    nf.dt = dt;
    return nf;
}

template <class R>
SystemSolution<R> solve_system_normal_form_one(const BivariatePoly<R>& p,
                                               const ConicQT<R>& q,
                                               const SolveOptions& opt,
                                               double sigma2_scale) {
    using std::abs;
    using C = Cx<R>;
    auto nf = normal_form(p, q, sigma2_scale);
    const int dt = nf.dt;

    SystemSolution<R> sol;

    auto consider = [&](const C& xi1, const C& xi2, double err) {
        C r1, r2;
        nf.to_rho(xi1, xi2, r1, r2);
        double re1 = to_double(r1.re), im1 = to_double(r1.im);
        double re2 = to_double(r2.re), im2 = to_double(r2.im);
        if (std::abs(im1) > opt.imag_tol * std::max(1.0, std::abs(re1))) return;
        if (std::abs(im2) > opt.imag_tol * std::max(1.0, std::abs(re2))) return;
        // starts at the real parts and, for blurred conjugate pairs, shifted
        // by the imaginary offsets; polishing certifies or rejects each
        double y2s[3] = {re2, re2 - std::abs(im2), re2 + std::abs(im2)};
        int ny = im2 == 0.0 ? 1 : 3;
        for (int k = 0; k < ny; ++k) {
            if (re1 <= opt.rho_min || y2s[k] <= opt.rho_min) continue;
            R x(re1), y(y2s[k]);
            CandidateRoot cr;
            cr.root_error = err;
            if (!detail::polish_root(p, q, x, y, cr, opt.residual_tol)) continue;
            if (cr.rho1 <= opt.rho_min || cr.rho2 <= opt.rho_min) continue;
            sol.roots.push_back(cr);
        }
    };

    double xi_scale = 1.0 + to_double(norm2(nf.alpha / nf.sigma1)) +
                      to_double(norm2(nf.beta / nf.sigma2));
    if (to_double(abs(nf.c_star)) > 1e-20 * xi_scale) {
        auto rs = find_roots(nf.u);
        sol.converged = rs.converged;
        sol.raw_root_count = static_cast<int>(rs.roots.size());
        for (size_t i = 0; i < rs.roots.size(); ++i) {
            const C& xi2 = rs.roots[i];
            if (to_double(norm2(xi2)) == 0.0) continue;
            C xi1 = nf.c_star / xi2;
            consider(xi1, xi2, rs.error_bounds[i]);
        }
    } else {
        // degenerate conic: the hyperbola collapses onto the lines xi1 = 0
        // and xi2 = 0; solve the restriction of p to each line
        for (int line = 0; line < 2; ++line) {
            UnivariatePoly<R> v;
            v.coeffs.assign(dt + 1, C(R(0.0)));
            for (int d = 0; d <= dt; ++d)
                v.coeffs[d] = line == 0 ? nf.ps[0][d] : nf.ps[d][0];
            v.trim(num_traits<R>::eps * 1024.0);
            auto rs = find_roots(v);
            sol.converged = sol.converged && rs.converged;
            sol.raw_root_count += static_cast<int>(rs.roots.size());
            for (size_t i = 0; i < rs.roots.size(); ++i) {
                C zero(R(0.0));
                if (line == 0)
                    consider(zero, rs.roots[i], rs.error_bounds[i]);
                else
                    consider(rs.roots[i], zero, rs.error_bounds[i]);
            }
        }
    }
    detail::dedup_roots(sol.roots);
    return sol;
}

// At any single sigma2 the degree-48 eliminant can pack many xi2 roots into a
// thin annulus (|c_star| = 1 forces |xi1 xi2| = 1), where they are too
// ill-conditioned to localize; small scales additionally push far roots out of
// the representable ring and the eliminant silently loses degree.  Larger
// scales compress the root configuration, so run the requested (or automatic)
// scale together with 4x and 16x and merge: the Newton polish certifies every
// candidate against the original system either way, so extra seeds are
// harmless.
template <class R>
SystemSolution<R> solve_system_normal_form(const BivariatePoly<R>& p,
                                           const ConicQT<R>& q,
                                           const SolveOptions& opt = {},
                                           double sigma2_scale = 0.0) {
    double base = sigma2_scale;
    if (base <= 0.0) {
        R kap = q.q00 - q.q10 * q.q10 / (R(4.0) * q.q20) -
                q.q01 * q.q01 / (R(4.0) * q.q02);
        double b = std::abs(to_double(kap / (R(2.0) * q.q02)));
        base = b > 1e-150 ? std::sqrt(b) : 1.0;
    }
    const double scales[3] = {base, 4.0 * base, 16.0 * base};
    auto sol = solve_system_normal_form_one(p, q, opt, scales[0]);
    for (int k = 1; k < 3; ++k) {
        auto extra = solve_system_normal_form_one(p, q, opt, scales[k]);
        sol.converged = sol.converged && extra.converged;
        for (auto& r : extra.roots) sol.roots.push_back(r);
    }
    detail::dedup_roots(sol.roots);
    detail::complete_clusters(p, q, sol.roots, opt.rho_min, opt.residual_tol);
    return sol;
}

} // namespace klink
