// Acceptance gate: end-to-end checks of the linkage library against
// independent oracles, the published worked example, structural invariants
// and statistical behaviour.  Prints one [PASS]/[FAIL] line per criterion
// and exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "klink/covariance.hpp"
#include "klink/linkage.hpp"
#include "klink/runio.hpp"
#include "klink/simkit.hpp"

using namespace klink;

namespace {

double now_s() {
    using clock = std::chrono::steady_clock;
    static const auto t0 = clock::now();
    return std::chrono::duration<double>(clock::now() - t0).count();
}

int g_failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
    std::printf("[%s] criterion %d: %s -- %s\n", pass ? "PASS" : "FAIL", id,
                what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

// ---------------------------------------------------------------------------
// synthetic pair population shared by criteria 1, 2 and 9

struct TestPair {
    Attributable a1, a2;
    IntegralCoeffs c1, c2;
    std::string id;
};

std::vector<TestPair> make_pairs(int n, uint64_t seed) {
    AnalyticEphemeris eph;
    PopulationSpec spec;
    spec.n_objects = 2 * n; // margin for degenerate-geometry skips
    auto pop = generate_population(spec, seed);
    std::mt19937_64 rng(seed + 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<TestPair> out;
    for (const auto& o : pop) {
        if (int(out.size()) >= n) break;
        double t1 = 54001.0 + 20.0 * u(rng);
        double dt = 5.0 + 10.0 * u(rng);
        TestPair tp;
        tp.a1 = exact_attributable(o.elements, {t1}, eph);
        tp.a2 = exact_attributable(o.elements, {t1 + dt}, eph);
        tp.c1 = compute_coeffs(tp.a1);
        tp.c2 = compute_coeffs(tp.a2);
        if (check_degeneracy(tp.c1, tp.c2).kind != DegeneracyKind::None) continue;
        tp.id = o.id;
        out.push_back(std::move(tp));
    }
    return out;
}

// ---------------------------------------------------------------------------
// brute-force 2D oracle: dense grid over rho1 in [lo, hi], conic solved
// exactly for rho2 on both quadratic branches, sign changes (and near-zero
// local minima, which catch double roots) of p along each branch seed a 2D
// Newton polish on the original system.  Independent of the eliminant
// machinery: the only shared code is the final Newton certification.

struct Box {
    double lo = 0.02, hi = 20.0;
    bool contains(double x, double y) const {
        return x >= lo && x <= hi && y >= lo && y <= hi;
    }
};

std::vector<CandidateRoot> oracle_roots(const BivariatePoly<DdReal>& p,
                                        const ConicQ& q, const Box& box) {
    const int N = 6000;
    const double llo = std::log(box.lo), lhi = std::log(box.hi);
    double q20 = to_double(q.q20), q10 = to_double(q.q10);
    double q02 = to_double(q.q02), q01 = to_double(q.q01), q00 = to_double(q.q00);

    std::vector<CandidateRoot> roots;
    auto polish_from = [&](double x0, double y0) {
        DdReal x(x0), y(y0);
        CandidateRoot cr;
        if (!detail::polish_root(p, q, x, y, cr, 1e-8)) return;
        if (!box.contains(cr.rho1, cr.rho2)) return;
        roots.push_back(cr);
    };

    for (int branch = 0; branch < 2; ++branch) {
        double sgn = branch == 0 ? 1.0 : -1.0;
        bool prev_ok = false;
        double prev_r1 = 0.0, prev_r2 = 0.0, prev_p = 0.0;
        double prev2_p = 0.0; // one further back, for local-minimum seeding
        bool prev2_ok = false;
        for (int i = 0; i <= N; ++i) {
            double r1 = std::exp(llo + (lhi - llo) * i / N);
            double b0 = q20 * r1 * r1 + q10 * r1 + q00;
            double disc = q01 * q01 - 4.0 * q02 * b0;
            if (disc < 0.0) {
                prev_ok = prev2_ok = false;
                continue;
            }
            double r2 = (-q01 + sgn * std::sqrt(disc)) / (2.0 * q02);
            if (r2 < 0.25 * box.lo || r2 > 4.0 * box.hi) {
                prev_ok = prev2_ok = false;
                continue;
            }
            double pv = to_double(p.eval(DdReal(r1), DdReal(r2)));
            if (prev_ok && pv * prev_p < 0.0)
                polish_from(0.5 * (r1 + prev_r1), 0.5 * (r2 + prev_r2));
            // local minimum of |p| without a sign change: candidate double root
            if (prev_ok && prev2_ok && std::abs(prev_p) < std::abs(prev2_p) &&
                std::abs(prev_p) < std::abs(pv)) {
                double env = to_double(
                    detail::envelope(p, DdReal(prev_r1), DdReal(prev_r2)));
                if (std::abs(prev_p) < 1e-6 * env) polish_from(prev_r1, prev_r2);
            }
            prev2_ok = prev_ok;
            prev2_p = prev_p;
            prev_ok = true;
            prev_r1 = r1;
            prev_r2 = r2;
            prev_p = pv;
        }
    }
    detail::dedup_roots(roots);
    return roots;
}

std::vector<CandidateRoot> in_box(const std::vector<CandidateRoot>& v, const Box& b) {
    std::vector<CandidateRoot> out;
    for (const auto& r : v)
        if (b.contains(r.rho1, r.rho2)) out.push_back(r);
    return out;
}

// every root of a matched in b within tol (componentwise, AU)
int unmatched(const std::vector<CandidateRoot>& a, const std::vector<CandidateRoot>& b,
              double tol) {
    int miss = 0;
    for (const auto& r : a) {
        bool found = false;
        for (const auto& s : b)
            if (std::abs(r.rho1 - s.rho1) <= tol && std::abs(r.rho2 - s.rho2) <= tol)
                found = true;
        if (!found) ++miss;
    }
    return miss;
}

// ---------------------------------------------------------------------------
// criteria 1, 2, 9: oracle equivalence, engine cross-validation, precision
// necessity, all over the same 100-pair population

void criteria_1_2_9() {
    double t_start = now_s();
    auto pairs = make_pairs(100, 2026);
    Box box;
    SolveOptions opt;
    opt.rho_min = 1e-3; // both sets restricted to the box afterwards

    int oracle_mismatch_pairs = 0, engine_disagree_pairs = 0;
    int dd_missing_total = 0, dbl_missing_total = 0, dbl_miss_pairs = 0;
    std::vector<std::string> diags;

    for (const auto& tp : pairs) {
        auto p = build_p<DdReal>(tp.c1, tp.c2);
        auto q = build_conic(tp.c1, tp.c2);

        auto oracle = oracle_roots(p, q, box);
        auto dft = in_box(solve_system_dft(p, q, opt).roots, box);
        auto nf = in_box(solve_system_normal_form(p, q, opt).roots, box);

        // 1: set equality oracle vs dft within 1e-6 AU
        int m1 = unmatched(oracle, dft, 1e-6);
        int m2 = unmatched(dft, oracle, 1e-6);
        dd_missing_total += m1;
        if (m1 + m2 > 0) {
            ++oracle_mismatch_pairs;
            diags.push_back(fmt("  %s: oracle %zu dft %zu (missed %d, extra %d)",
                                tp.id.c_str(), oracle.size(), dft.size(), m1, m2));
        }

        // 2: dft vs nf agreement within 1e-8 AU
        if (unmatched(dft, nf, 1e-8) + unmatched(nf, dft, 1e-8) > 0) {
            ++engine_disagree_pairs;
            auto deg = check_degeneracy(tp.c1, tp.c2);
            diags.push_back(
                fmt("  %s: dft %zu vs nf %zu roots differ; conditioning: "
                    "parallel-D sin = %.3e, |n12| = %.3e",
                    tp.id.c_str(), dft.size(), nf.size(), deg.parallel_d, deg.n12));
        }

        // 9: standard-precision resultant path vs the oracle
        auto pd = build_p<double>(tp.c1, tp.c2);
        auto qd = conic_cast<double>(q);
        auto dbl = in_box(solve_system_dft(pd, qd, opt).roots, box);
        int dm = unmatched(oracle, dbl, 1e-6);
        if (dm > 0) {
            dbl_missing_total += dm;
            ++dbl_miss_pairs;
        }
    }
    double elapsed = now_s() - t_start;

    for (const auto& d : diags) std::printf("%s\n", d.c_str());
    bool p1 = oracle_mismatch_pairs == 0 && int(pairs.size()) == 100 && elapsed < 300.0;
    report(1, p1, "DFT candidate set equals the brute-force 2D oracle",
           fmt("%zu pairs, %d mismatched, %.1f s (< 300 s)", pairs.size(),
               oracle_mismatch_pairs, elapsed));

    bool p2 = engine_disagree_pairs <= 1; // >= 99% of 100 pairs
    report(2, p2, "dft and nf candidate sets agree to 1e-8 AU on >= 99% of pairs",
           fmt("%d/%zu pairs disagree (diagnostics above)", engine_disagree_pairs,
               pairs.size()));

    bool p9 = dd_missing_total == 0;
    report(9, p9, "extended precision loses no oracle root",
           dbl_missing_total > 0
               ? fmt("dd missed 0; standard double missed %d roots on %d pairs "
                     "(degradation demonstrated)",
                     dbl_missing_total, dbl_miss_pairs)
               : "dd missed 0; standard double also matched on this population");
}

// ---------------------------------------------------------------------------
// criteria 3 and 4: worked-example reproduction and spurious-root filtering

struct DroppedRoot {
    double rho1 = 0.0, rho2 = 0.0;
    std::string reason;
};

void criteria_3_4() {
    std::ifstream f("../../data/101878_attributables.json");
    if (!f) f.open("data/101878_attributables.json");
    if (!f) {
        report(3, false, "worked-example reproduction", "attributable file not found");
        report(4, false, "spurious-root filtering", "attributable file not found");
        return;
    }
    json root;
    f >> root;
    auto ats = attributables_from_json(root);
    LinkageConfig cfg;
    cfg.chi_max = 1e6; // keep both published solutions; the norm itself decides
    auto res = link(ats[0].at, ats[1].at, cfg);

    auto find_sol = [&](double r1, double r2) -> const LinkageSolution* {
        for (const auto& s : res.solutions)
            if (std::abs(s.rho1 - r1) < 2e-2 && std::abs(s.rho2 - r2) < 2e-2) return &s;
        return nullptr;
    };
    const auto* row4 = find_sol(1.0409, 2.0517);
    const auto* row2 = find_sol(0.7130, 1.4100);

    bool elements_ok = false, norms_ok = false;
    std::string detail;
    if (row4 && row2) {
        // preferred solution = smaller norm; published values (AU, -, deg)
        const auto& el = row4->elements1;
        double a = el.a, e = el.e;
        double inc = el.inc / constants::deg;
        double node = wrap_two_pi(el.Omega) / constants::deg;
        elements_ok = std::abs(a - 2.25828) < 1e-2 && std::abs(e - 0.19787) < 1e-2 &&
                      std::abs(inc - 0.59995) < 1e-2 &&
                      std::abs(node - 156.42531) < 1e-2;
        norms_ok = row4->norm < row2->norm && row2->norm / row4->norm >= 100.0;
        detail = fmt("rho (%.4f, %.4f) and (%.4f, %.4f); a=%.5f e=%.5f I=%.5f "
                     "node=%.5f; norms %.3f / %.3f (ratio %.0f)",
                     row4->rho1, row4->rho2, row2->rho1, row2->rho2, a, e, inc, node,
                     row4->norm, row2->norm, row2->norm / row4->norm);
    } else {
        detail = fmt("published pairs not both recovered (%d solutions)",
                     int(res.solutions.size()));
    }
    report(3, row4 && row2 && elements_ok && norms_ok,
           "published solution pairs, elements and norm separation reproduced",
           detail);

    // parse the audit log back into (rho1, rho2, reason)
    std::vector<DroppedRoot> dropped;
    for (const auto& line : res.diag.rejected) {
        DroppedRoot d;
        if (std::sscanf(line.c_str(), "(%lf, %lf)", &d.rho1, &d.rho2) == 2) {
            auto cut = line.find("): ");
            if (cut != std::string::npos) d.reason = line.substr(cut + 3);
            dropped.push_back(d);
        }
    }
    auto rejected_as = [&](double r1, double r2, const char* key) {
        for (const auto& d : dropped)
            if (std::abs(d.rho1 - r1) < 2e-2 && std::abs(d.rho2 - r2) < 2e-2 &&
                d.reason.find(key) != std::string::npos)
                return true;
        return false;
    };
    // published table rows 1, 3, 5, 6 and the stated rejection reasons
    bool r1 = rejected_as(0.0059, 0.0097, "below rho_min");
    bool r3 = rejected_as(0.7045, 1.3933, "unsquared");
    bool r5 = rejected_as(1.1659, 2.2952, "unsquared");
    bool r6 = rejected_as(1.4246, 2.7968, "once-squared");
    bool only_two = res.solutions.size() == 2;
    report(4, r1 && r3 && r5 && r6 && only_two,
           "table rows 1/3/5/6 rejected for the published reasons, 2/4 kept",
           fmt("near-zero %s, unsquared %s/%s, once-squared %s, accepted %zu",
               r1 ? "yes" : "NO", r3 ? "yes" : "NO", r5 ? "yes" : "NO",
               r6 ? "yes" : "NO", res.solutions.size()));
}

// ---------------------------------------------------------------------------
// criterion 5: structural degree invariants of p and the resultant

KeplerianElements sample_elements(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    KeplerianElements el;
    el.a = 1.4 + 2.5 * u(rng);
    el.e = 0.05 + 0.35 * u(rng);
    el.inc = 0.6 * u(rng);
    el.Omega = constants::two_pi * u(rng);
    el.omega = constants::two_pi * u(rng);
    el.ell = constants::two_pi * u(rng);
    el.epoch = {54000.0};
    return el;
}

void criterion_5() {
    double t_start = now_s();
    AnalyticEphemeris eph;
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    // degree of the rho2-coefficient of rho1^j: 20 for j <= 4, then
    // 24-(j+1) for odd j and 24-j for even j
    auto table_degree = [](int j) {
        if (j <= 4) return 20;
        return j % 2 == 1 ? 23 - j : 24 - j;
    };
    // structural-zero threshold: double-double residue of algebraic
    // cancellations sits ~30 decades below the leading coefficients, far
    // under this cut; genuine coefficients sit far above it
    const double zero_tol = 1e-20;

    int instances = 0, bad_total = 0, bad_coeff = 0, bad_res = 0;
    int max_res_degree = 0;
    while (instances < 1000) {
        auto el = sample_elements(rng);
        double t1 = 54000.0 + 30.0 * u(rng);
        double dt = 1.0 + 29.0 * u(rng);
        auto a1 = exact_attributable(el, {t1}, eph);
        auto a2 = exact_attributable(el, {t1 + dt}, eph);
        auto c1 = compute_coeffs(a1), c2 = compute_coeffs(a2);
        if (check_degeneracy(c1, c2).kind != DegeneracyKind::None) continue;
        ++instances;

        auto p = build_p<DdReal>(c1, c2);
        if (p.total_degree(zero_tol) != 24) ++bad_total;
        for (int j = 0; j <= 20; ++j)
            if (p.coeff_degree(j, zero_tol) > table_degree(j)) {
                ++bad_coeff;
                break;
            }
        auto res = resultant_rho1(p, build_conic(c1, c2));
        int dres = res.degree();
        max_res_degree = std::max(max_res_degree, dres);
        if (dres > 48) ++bad_res;
    }
    double elapsed = now_s() - t_start;
    report(5, bad_total == 0 && bad_coeff == 0 && bad_res == 0,
           "p has total degree 24, coefficient degrees within the table, "
           "Res degree <= 48 on 1000 instances",
           fmt("%d violations (total %d, coeff %d, res %d); max Res degree %d; "
               "%.1f s",
               bad_total + bad_coeff + bad_res, bad_total, bad_coeff, bad_res,
               max_res_degree, elapsed));
}

// ---------------------------------------------------------------------------
// criterion 6: analytic Jacobians vs central finite differences at 50
// well-conditioned solutions; covariance shape checks

double& acomp(Attributable& a, int j) {
    switch (j) {
        case 0: return a.alpha;
        case 1: return a.delta;
        case 2: return a.alpha_dot;
        default: return a.delta_dot;
    }
}

Eigen::Vector4d resolve_R(const Attributable& a1, const Attributable& a2,
                          Eigen::Vector4d R) {
    for (int it = 0; it < 60; ++it) {
        auto phi = build_phi(a1, a2, R);
        Eigen::Vector4d dR = phi.jac_R.fullPivLu().solve(phi.residual);
        R -= dR;
        if (dR.norm() < 1e-14 * std::max(1.0, R.norm())) break;
    }
    return R;
}

// the compatibility discrepancy as a plain function of A (re-solving R),
// matching what delta_jacobians differentiates in the linkage configuration
DeltaPair delta_of(const Attributable& a1, const Attributable& a2,
                   const Eigen::Vector4d& R0) {
    Eigen::Vector4d R = resolve_R(a1, a2, R0);
    double t1 = a1.epoch.mjd - R(0) / constants::c_light;
    double t2 = a2.epoch.mjd - R(2) / constants::c_light;
    AttributableElements ae1{a1.alpha, a1.delta, a1.alpha_dot, a1.delta_dot,
                             R(0),     R(1),     Epoch{t1}};
    AttributableElements ae2{a2.alpha, a2.delta, a2.alpha_dot, a2.delta_dot,
                             R(2),     R(3),     Epoch{t2}};
    Vec3 r, rd;
    attributable_to_cartesian(ae1, a1.q, a1.q_dot, r, rd);
    r = equatorial_to_ecliptic(r);
    rd = equatorial_to_ecliptic(rd);
    auto el1 = cartesian_to_keplerian(r, rd, ae1.epoch);
    attributable_to_cartesian(ae2, a2.q, a2.q_dot, r, rd);
    r = equatorial_to_ecliptic(r);
    rd = equatorial_to_ecliptic(rd);
    auto el2 = cartesian_to_keplerian(r, rd, ae2.epoch);
    double n = constants::k_gauss * std::pow(el1.a, -1.5);
    DeltaPair d;
    d.d_omega = angle_diff_smooth(el1.omega, el2.omega);
    d.d_ell = angle_diff_smooth(el1.ell, el2.ell + n * (t1 - t2));
    return d;
}

void criterion_6() {
    AnalyticEphemeris eph;
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double rel_tol = 1e-3;
    const double sigma = 0.01 * constants::arcsec;

    int tested = 0, bad_phi = 0, bad_delta = 0, bad_cov = 0;
    while (tested < 50) {
        auto el = sample_elements(rng);
        double t1 = 54000.0 + 30.0 * u(rng);
        double dt = 5.0 + 20.0 * u(rng);
        double r1, rd1, r2, rd2;
        auto a1 = exact_attributable(el, {t1}, eph, sigma, &r1, &rd1);
        auto a2 = exact_attributable(el, {t1 + dt}, eph, sigma, &r2, &rd2);
        auto c1 = compute_coeffs(a1), c2 = compute_coeffs(a2);
        if (check_degeneracy(c1, c2).kind != DegeneracyKind::None) continue;
        Eigen::Vector4d R{r1, rd1, r2, rd2};
        auto sj = solution_jacobian(a1, a2, R);
        if (sj.degenerate || sj.condition > 1e5) continue;
        auto dj = delta_jacobians(a1, a2, R, sj.dR_dA, true, true);
        if (dj.omega_ill_defined) continue;
        ++tested;

        const double h = 1e-7;
        auto phi = build_phi(a1, a2, R);
        bool phi_ok = true;
        for (int j = 0; j < 4; ++j) {
            Eigen::Vector4d Rp = R, Rm = R;
            Rp(j) += h;
            Rm(j) -= h;
            Eigen::Vector4d fd = (build_phi(a1, a2, Rp).residual -
                                  build_phi(a1, a2, Rm).residual) /
                                 (2.0 * h);
            if ((fd - phi.jac_R.col(j)).norm() > rel_tol * phi.jac_R.norm())
                phi_ok = false;
        }
        for (int j = 0; j < 8; ++j) {
            Attributable p1 = a1, p2 = a2, m1 = a1, m2 = a2;
            if (j < 4) {
                acomp(p1, j) += h;
                acomp(m1, j) -= h;
            } else {
                acomp(p2, j - 4) += h;
                acomp(m2, j - 4) -= h;
            }
            Eigen::Vector4d fd =
                (build_phi(p1, p2, R).residual - build_phi(m1, m2, R).residual) /
                (2.0 * h);
            if ((fd - phi.jac_A.col(j)).norm() > rel_tol * phi.jac_A.norm())
                phi_ok = false;
        }
        if (!phi_ok) ++bad_phi;

        bool delta_ok = true;
        double dnorm = std::max(dj.dDelta_dA.norm(), 1.0);
        for (int j = 0; j < 8; ++j) {
            Attributable p1 = a1, p2 = a2, m1 = a1, m2 = a2;
            if (j < 4) {
                acomp(p1, j) += h;
                acomp(m1, j) -= h;
            } else {
                acomp(p2, j - 4) += h;
                acomp(m2, j - 4) -= h;
            }
            auto dp = delta_of(p1, p2, R);
            auto dm = delta_of(m1, m2, R);
            Eigen::Vector2d fd{angle_diff_smooth(dp.d_omega, dm.d_omega) / (2.0 * h),
                               angle_diff_smooth(dp.d_ell, dm.d_ell) / (2.0 * h)};
            if ((fd - dj.dDelta_dA.col(j)).norm() > rel_tol * dnorm) delta_ok = false;
        }
        if (!delta_ok) ++bad_delta;

        auto psi = propagate(a1.gamma, a2.gamma, sj.dR_dA, dj.dDelta_dA);
        Eigen::Matrix2d gd = psi.gamma_delta();
        bool sym = (psi.gamma_psi - psi.gamma_psi.transpose()).norm() == 0.0;
        bool pd = gd(0, 0) > 0.0 &&
                  gd(0, 0) * gd(1, 1) - gd(0, 1) * gd(1, 0) > 0.0;
        if (!(sym && pd)) ++bad_cov;
    }
    report(6, bad_phi == 0 && bad_delta == 0 && bad_cov == 0,
           "analytic Jacobians match central FD to 1e-3; Gamma_Psi symmetric, "
           "Gamma_Delta positive definite",
           fmt("50 solutions: %d Phi-Jacobian, %d Delta-Jacobian, %d covariance "
               "failures",
               bad_phi, bad_delta, bad_cov));
}

// ---------------------------------------------------------------------------
// criterion 7: Monte Carlo distribution of ||Delta||*^2 vs chi-square(2)

void criterion_7() {
    double t_start = now_s();
    AnalyticEphemeris eph;
    KeplerianElements el;
    el.a = 2.45;
    el.e = 0.18;
    el.inc = 0.22;
    el.Omega = 1.3;
    el.omega = 2.4;
    el.ell = 0.9;
    el.epoch = {54000.0};
    const double sigma = 0.01 * constants::arcsec;
    double r1t, r2t;
    auto base1 = exact_attributable(el, {54003.0}, eph, sigma, &r1t);
    auto base2 = exact_attributable(el, {54012.0}, eph, sigma, &r2t);

    LinkageConfig cfg;
    cfg.engine = LinkEngine::DFT_Resultant;
    cfg.chi_max = 1e30; // collect the statistic unconditionally

    std::mt19937_64 rng(707);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> n2;
    int lost = 0;
    const int trials = 500;
    for (int t = 0; t < trials; ++t) {
        Attributable a1 = base1, a2 = base2;
        for (int j = 0; j < 4; ++j) acomp(a1, j) += sigma * gauss(rng);
        for (int j = 0; j < 4; ++j) acomp(a2, j) += sigma * gauss(rng);
        auto res = link(a1, a2, cfg);
        const LinkageSolution* best = nullptr;
        double bd = 1e9;
        for (const auto& s : res.solutions) {
            double d = std::abs(s.rho1 - r1t) + std::abs(s.rho2 - r2t);
            if (d < bd) {
                bd = d;
                best = &s;
            }
        }
        if (!best || bd > 0.1) {
            ++lost;
            continue;
        }
        n2.push_back(best->norm * best->norm);
    }
    std::sort(n2.begin(), n2.end());
    double ks = 0.0;
    const double n = double(n2.size());
    for (size_t i = 0; i < n2.size(); ++i) {
        double cdf = 1.0 - std::exp(-0.5 * n2[i]); // chi-square(2)
        ks = std::max(ks, std::abs(cdf - double(i) / n));
        ks = std::max(ks, std::abs(cdf - double(i + 1) / n));
    }
    report(7, ks < 0.15 && lost <= trials / 100,
           "||Delta||*^2 follows chi-square(2) under injected noise",
           fmt("%zu/%d trials, Kolmogorov distance %.4f (< 0.15), %.1f s", n2.size(),
               trials, ks, now_s() - t_start));
}

// ---------------------------------------------------------------------------
// criterion 8: desk-scale synthetic-survey efficiency and accuracy

void criterion_8() {
    double t_start = now_s();
    AnalyticEphemeris eph;
    PopulationSpec spec;
    spec.n_objects = 200;
    spec.neo_fraction = 0.0; // main-belt-like survey
    spec.tracklets_per_object = 2;
    spec.noise_sigma_arcsec = 0.01;
    spec.survey_span_days = 15.0;
    FilterConfig fcfg;
    LinkageConfig lcfg;
    auto rep = run_experiment(spec, fcfg, lcfg, 42, eph);
    double elapsed = now_s() - t_start;
    report(8, rep.efficiency >= 0.90 && rep.accuracy >= 0.80 && elapsed < 600.0,
           "200-object survey: efficiency >= 0.90, accuracy >= 0.80",
           fmt("efficiency %.4f (%d/%d), accuracy %.4f (%d true / %d accepted), "
               "%.1f s (< 600 s)",
               rep.efficiency, rep.objects_linked, rep.objects_linkable, rep.accuracy,
               rep.true_links_found, rep.total_accepted, elapsed));
}

} // namespace

int main() {
    std::printf("acceptance gate\n");
    criteria_1_2_9();
    criteria_3_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
