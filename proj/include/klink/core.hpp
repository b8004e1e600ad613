#pragma once

// Basic scalar/vector/angle/time types and the mobile basis adapted to the
// apparent path of a moving object on the celestial sphere.

#include <cmath>
#include <stdexcept>

#include "klink/dd.hpp"

namespace klink {

namespace constants {
// Gauss gravitational constant, AU^(3/2)/day
inline constexpr double k_gauss = 0.01720209895;
// speed of light, AU/day
inline constexpr double c_light = 173.144633;
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;
inline constexpr double deg = pi / 180.0;
inline constexpr double arcsec = deg / 3600.0;
// mean obliquity of the ecliptic at J2000, degrees
inline constexpr double obliquity_j2000_deg = 23.4392911;
inline constexpr double au_km = 1.495978707e8;
} // namespace constants

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
inline Vec3 operator*(const Vec3& a, double s) { return s * a; }
inline Vec3 operator/(const Vec3& a, double s) { return {a.x / s, a.y / s, a.z / s}; }
inline Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
inline Vec3& operator+=(Vec3& a, const Vec3& b) { a = a + b; return a; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 unit(const Vec3& a) { return a / norm(a); }
inline double triple(const Vec3& a, const Vec3& b, const Vec3& c) { return dot(a, cross(b, c)); }

struct Epoch {
    double mjd = 0.0;
    friend auto operator<=>(const Epoch&, const Epoch&) = default;
};

// Smooth difference of two angles, result in (-pi, pi].
inline double angle_diff_smooth(double theta1, double theta2) {
    double d = std::fmod(theta1 - theta2 + constants::pi, constants::two_pi);
    if (d < 0.0) d += constants::two_pi;
    if (d == 0.0) d = constants::two_pi; // keep the result in (-pi, pi]
    return d - constants::pi;
}

inline double wrap_two_pi(double theta) {
    double t = std::fmod(theta, constants::two_pi);
    if (t < 0.0) t += constants::two_pi;
    return t;
}

struct MobileBasis {
    Vec3 rho_hat;        // line of sight
    Vec3 rho_hat_alpha;  // d rho_hat / d alpha  (length cos(delta))
    Vec3 rho_hat_delta;  // d rho_hat / d delta
    Vec3 v_hat;          // d rho_hat / dt = eta * v_hat
    Vec3 n_hat;          // rho_hat x v_hat
    double eta = 0.0;    // proper motion, rad/day
};

// Orthonormal frame {rho_hat, v_hat, n_hat} adapted to the apparent path.
// Throws if the proper motion vanishes (v_hat, n_hat undefined).
inline MobileBasis mobile_basis(double alpha, double delta,
                                double alpha_dot, double delta_dot) {
    double ca = std::cos(alpha), sa = std::sin(alpha);
    double cd = std::cos(delta), sd = std::sin(delta);
    MobileBasis b;
    b.rho_hat = {ca * cd, sa * cd, sd};
    b.rho_hat_alpha = {-sa * cd, ca * cd, 0.0};
    b.rho_hat_delta = {-ca * sd, -sa * sd, cd};
    b.eta = std::sqrt(alpha_dot * alpha_dot * cd * cd + delta_dot * delta_dot);
    if (b.eta == 0.0)
        throw std::domain_error("mobile_basis: zero proper motion, v_hat undefined");
    Vec3 drho = alpha_dot * b.rho_hat_alpha + delta_dot * b.rho_hat_delta;
    b.v_hat = drho / b.eta;
    b.n_hat = cross(b.rho_hat, b.v_hat);
    return b;
}

} // namespace klink
