#include <doctest.h>

#include <random>

#include "klink/elements.hpp"

using namespace klink;
using constants::k_gauss;

TEST_CASE("attributable_to_cartesian basic cases") {
    AttributableElements ae;
    ae.alpha = 0.0;
    ae.delta = 0.0;
    ae.rho = 1.0;
    Vec3 r, rd;
    attributable_to_cartesian(ae, {0, 0, 0}, {0, 0, 0}, r, rd);
    CHECK(r.x == doctest::Approx(1.0));
    CHECK(norm(rd) < 1e-15);

    // round trip via basis projections
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        AttributableElements a;
        a.alpha = 2.0 * u(rng);
        a.delta = 1.2 * u(rng);
        a.alpha_dot = 0.05 * u(rng);
        a.delta_dot = 0.05 * u(rng);
        a.rho = 1.5 + u(rng);
        a.rho_dot = 0.01 * u(rng);
        Vec3 q{u(rng), u(rng), u(rng)}, qd{0.01 * u(rng), 0.01 * u(rng), 0.01 * u(rng)};
        attributable_to_cartesian(a, q, qd, r, rd);
        double ca = std::cos(a.alpha), sa = std::sin(a.alpha);
        double cd = std::cos(a.delta), sd = std::sin(a.delta);
        Vec3 rho_hat{ca * cd, sa * cd, sd};
        Vec3 rho_a{-sa * cd, ca * cd, 0.0};
        Vec3 rho_d{-ca * sd, -sa * sd, cd};
        double rho = dot(r - q, rho_hat);
        double rho_dot = dot(rd - qd, rho_hat);
        double adot = dot(rd - qd, rho_a) / (rho * cd * cd);
        double ddot = dot(rd - qd, rho_d) / rho;
        CHECK(rho == doctest::Approx(a.rho).epsilon(1e-13));
        CHECK(rho_dot == doctest::Approx(a.rho_dot).epsilon(1e-10));
        CHECK(adot == doctest::Approx(a.alpha_dot).epsilon(1e-10));
        CHECK(ddot == doctest::Approx(a.delta_dot).epsilon(1e-10));
    }
}

TEST_CASE("circular equatorial prograde orbit") {
    Vec3 r{1.0, 0.0, 0.0}, v{0.0, k_gauss, 0.0};
    auto el = cartesian_to_keplerian(r, v, {54000.0});
    CHECK(el.a == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(el.e < 1e-13);
    CHECK(el.inc < 1e-13);
}

TEST_CASE("solve_kepler") {
    CHECK(solve_kepler(0.0, 0.5) == doctest::Approx(0.0));
    CHECK(solve_kepler(constants::pi, 0.3) == doctest::Approx(constants::pi));
    CHECK(solve_kepler(constants::pi, 0.95) == doctest::Approx(constants::pi));
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ul(-10.0, 10.0), ue(0.0, 0.99);
    for (int t = 0; t < 5000; ++t) {
        double l = ul(rng), e = ue(rng);
        double E = solve_kepler(l, e);
        CHECK(std::abs(E - e * std::sin(E) - l) < 1e-13);
    }
}

TEST_CASE("keplerian/cartesian round trip over random elliptic elements") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> ua(0.5, 40.0), ue(0.0, 0.95),
        ui(0.0, constants::pi), uang(0.0, constants::two_pi);
    for (int t = 0; t < 10000; ++t) {
        KeplerianElements el;
        el.a = ua(rng);
        el.e = ue(rng);
        el.inc = ui(rng);
        el.Omega = uang(rng);
        el.omega = uang(rng);
        el.ell = uang(rng);
        el.epoch = {54000.0};
        Vec3 r, v;
        keplerian_to_cartesian(el, el.epoch, r, v);
        auto back = cartesian_to_keplerian(r, v, el.epoch);
        CHECK(back.a == doctest::Approx(el.a).epsilon(1e-11));
        CHECK(back.e == doctest::Approx(el.e).epsilon(1e-9));
        CHECK(std::abs(back.inc - el.inc) < 1e-11);
        if (el.inc > 1e-6 && el.inc < constants::pi - 1e-6) {
            CHECK(std::abs(angle_diff_smooth(back.Omega, el.Omega)) < 1e-10);
            if (el.e > 1e-6) {
                CHECK(std::abs(angle_diff_smooth(back.omega, el.omega)) < 1e-8);
                CHECK(std::abs(angle_diff_smooth(back.ell, el.ell)) < 1e-8);
            }
        }
    }
}

TEST_CASE("energy and angular momentum conserved along propagation") {
    KeplerianElements el;
    el.a = 2.3;
    el.e = 0.25;
    el.inc = 0.3;
    el.Omega = 1.0;
    el.omega = 2.0;
    el.ell = 0.5;
    el.epoch = {54000.0};
    Vec3 r0, v0;
    keplerian_to_cartesian(el, el.epoch, r0, v0);
    double mu = k_gauss * k_gauss;
    double E0 = dot(v0, v0) / 2.0 - mu / norm(r0);
    Vec3 c0 = cross(r0, v0);
    for (double dt = 100.0; dt <= 1000.0; dt += 100.0) {
        Vec3 r, v;
        keplerian_to_cartesian(el, {el.epoch.mjd + dt}, r, v);
        double E = dot(v, v) / 2.0 - mu / norm(r);
        CHECK(std::abs(E - E0) < 1e-13);
        CHECK(norm(cross(r, v) - c0) < 1e-13);
    }
    // periodicity
    double period = constants::two_pi / (k_gauss * std::pow(el.a, -1.5));
    Vec3 rp, vp;
    keplerian_to_cartesian(el, {el.epoch.mjd + period}, rp, vp);
    CHECK(norm(rp - r0) < 1e-10);
}

TEST_CASE("hyperbolic state rejected") {
    Vec3 r{1.0, 0.0, 0.0}, v{0.0, 3.0 * k_gauss, 0.0};
    CHECK_THROWS_AS(cartesian_to_keplerian(r, v, {54000.0}), NonEllipticError);
}

TEST_CASE("compatibility delta") {
    KeplerianElements k1;
    k1.a = 2.5;
    k1.e = 0.1;
    k1.inc = 0.2;
    k1.Omega = 1.5;
    k1.omega = 0.7;
    k1.ell = 0.3;
    k1.epoch = {54000.0};

    SUBCASE("identical orbits, same epoch") {
        auto d = compatibility_delta(k1, k1, {54000.0}, {54000.0});
        CHECK(d.d_omega == 0.0);
        CHECK(d.d_ell == 0.0);
    }

    SUBCASE("same orbit propagated") {
        double n = k_gauss * std::pow(k1.a, -1.5);
        KeplerianElements k2 = k1;
        double dt = 37.5;
        k2.ell = wrap_two_pi(k1.ell + n * dt);
        k2.epoch = {54000.0 + dt};
        auto d = compatibility_delta(k2, k1, k2.epoch, k1.epoch);
        CHECK(std::abs(d.d_ell) < 1e-12);
        CHECK(std::abs(d.d_omega) < 1e-12);
    }

    SUBCASE("antisymmetric under epoch swap") {
        KeplerianElements k2 = k1;
        k2.omega = k1.omega + 0.01;
        k2.ell = k1.ell - 0.02;
        auto d12 = compatibility_delta(k1, k2, {54000.0}, {54005.0});
        auto d21 = compatibility_delta(k2, k1, {54005.0}, {54000.0});
        CHECK(d12.d_omega == doctest::Approx(-d21.d_omega).epsilon(1e-12));
        CHECK(d12.d_ell == doctest::Approx(-d21.d_ell).epsilon(1e-12));
    }

    SUBCASE("mismatched shared elements fault") {
        KeplerianElements k2 = k1;
        k2.a = k1.a * 1.001;
        CHECK_THROWS_AS(compatibility_delta(k1, k2, {54000.0}, {54000.0}),
                        std::logic_error);
    }
}
