#pragma once

// Attributables: angles + rates + covariance fitted from a short arc of
// observations, together with the interpolated observer state.

#include <Eigen/Dense>
#include <algorithm>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "klink/core.hpp"
#include "klink/ephemeris.hpp"

namespace klink {

struct Observation {
    Epoch time;
    double alpha = 0.0;       // rad
    double delta = 0.0;       // rad
    double sigma_alpha = 0.0; // rad, 1-sigma on the alpha coordinate
    double sigma_delta = 0.0; // rad
    std::string station_id;
};

struct Attributable {
    double alpha = 0.0, delta = 0.0;         // rad
    double alpha_dot = 0.0, delta_dot = 0.0; // rad/day
    Epoch epoch;
    Eigen::Matrix4d gamma = Eigen::Matrix4d::Zero(); // cov of (alpha,delta,alpha_dot,delta_dot)
    Vec3 q;     // observer heliocentric position at epoch, AU
    Vec3 q_dot; // observer heliocentric velocity, AU/day
    std::string station_id;

    Eigen::Vector4d angles() const { return {alpha, delta, alpha_dot, delta_dot}; }
};

// Observation CSV: columns mjd,ra_deg,dec_deg,sigma_arcsec,station.
// The quoted sigma is a great-circle arc; the alpha-coordinate sigma carries
// the 1/cos(delta) factor.
inline std::vector<Observation> parse_observations_csv(std::istream& in) {
    std::vector<Observation> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        // allow a header line
        if (line.rfind("mjd", 0) == 0) continue;
        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> f;
        while (std::getline(ss, field, ',')) f.push_back(field);
        if (f.size() != 5)
            throw std::runtime_error("observations csv line " + std::to_string(lineno) +
                                     ": expected 5 columns");
        Observation o;
        try {
            o.time.mjd = std::stod(f[0]);
            o.alpha = std::stod(f[1]) * constants::deg;
            o.delta = std::stod(f[2]) * constants::deg;
            double sig = std::stod(f[3]) * constants::arcsec;
            o.sigma_delta = sig;
            o.sigma_alpha = sig / std::cos(o.delta);
        } catch (const std::exception&) {
            throw std::runtime_error("observations csv line " + std::to_string(lineno) +
                                     ": bad numeric field");
        }
        // strip whitespace from station token
        o.station_id = f[4];
        o.station_id.erase(std::remove_if(o.station_id.begin(), o.station_id.end(),
                                          [](unsigned char c) { return std::isspace(c); }),
                           o.station_id.end());
        if (std::abs(o.delta) >= constants::pi / 2.0)
            throw std::runtime_error("observations csv line " + std::to_string(lineno) +
                                     ": |dec| must be < 90 deg");
        out.push_back(o);
    }
    return out;
}

// Group observations into tracklets: same station, gaps below `gap_days`.
inline std::vector<std::vector<Observation>> group_tracklets(std::vector<Observation> obs,
                                                             double gap_days = 0.5) {
    std::stable_sort(obs.begin(), obs.end(), [](const Observation& a, const Observation& b) {
        return a.time.mjd < b.time.mjd;
    });
    std::vector<std::vector<Observation>> tracklets;
    for (auto& o : obs) {
        bool placed = false;
        for (auto it = tracklets.rbegin(); it != tracklets.rend(); ++it) {
            if (it->back().station_id == o.station_id &&
                o.time.mjd - it->back().time.mjd <= gap_days) {
                it->push_back(o);
                placed = true;
                break;
            }
        }
        if (!placed) tracklets.push_back({o});
    }
    return tracklets;
}

namespace detail {

// weighted polynomial fit of one coordinate series; returns value/rate at
// t_bar and their 2x2 covariance
struct CoordFit {
    double value, rate;
    Eigen::Matrix2d cov;
};

inline CoordFit fit_coordinate(const std::vector<double>& dt, const std::vector<double>& y,
                               const std::vector<double>& sigma, int degree) {
    const int m = static_cast<int>(dt.size());
    const int n = degree + 1;
    Eigen::MatrixXd T(m, n);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) {
        double w = 1.0 / sigma[i];
        double p = 1.0;
        for (int j = 0; j < n; ++j) {
            T(i, j) = w * p;
            p *= dt[i];
        }
        b(i) = w * y[i];
    }
    Eigen::MatrixXd N = T.transpose() * T;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(N);
    if (ldlt.info() != Eigen::Success || N.determinant() == 0.0)
        throw std::runtime_error("fit_attributable: singular normal matrix");
    Eigen::VectorXd x = ldlt.solve(T.transpose() * b);
    Eigen::MatrixXd cov = N.inverse();
    CoordFit f;
    f.value = x(0);
    f.rate = x(1);
    f.cov << cov(0, 0), cov(0, 1), cov(1, 0), cov(1, 1);
    return f;
}

} // namespace detail

// Weighted least-squares fit of alpha(t), delta(t) at the mean epoch.
// degree is 1 (linear) or 2 (quadratic); observations must share a station.
inline Attributable fit_attributable(const std::vector<Observation>& obs, int degree) {
    if (degree != 1 && degree != 2)
        throw std::invalid_argument("fit_attributable: degree must be 1 or 2");
    const int m = static_cast<int>(obs.size());
    if (m < degree + 1)
        throw std::runtime_error("fit_attributable: insufficient observations");
    for (const auto& o : obs)
        if (o.station_id != obs.front().station_id)
            throw std::runtime_error("fit_attributable: observations from multiple stations");

    double t_bar = 0.0;
    for (const auto& o : obs) t_bar += o.time.mjd;
    t_bar /= m;

    std::vector<double> dt(m), a(m), d(m), sa(m), sd(m);
    for (int i = 0; i < m; ++i) {
        dt[i] = obs[i].time.mjd - t_bar;
        d[i] = obs[i].delta;
        sa[i] = obs[i].sigma_alpha;
        sd[i] = obs[i].sigma_delta;
    }
    // unwrap right ascension across 0/2pi
    double a0 = obs[0].alpha;
    for (int i = 0; i < m; ++i) a[i] = a0 + angle_diff_smooth(obs[i].alpha, a0);

    bool same_time = true;
    for (int i = 1; i < m; ++i)
        if (dt[i] != dt[0]) same_time = false;
    if (same_time) throw std::runtime_error("fit_attributable: all epochs equal");

    auto fa = detail::fit_coordinate(dt, a, sa, degree);
    auto fd = detail::fit_coordinate(dt, d, sd, degree);

    Attributable at;
    at.alpha = wrap_two_pi(fa.value);
    at.delta = fd.value;
    at.alpha_dot = fa.rate;
    at.delta_dot = fd.rate;
    at.epoch.mjd = t_bar;
    at.station_id = obs.front().station_id;
    at.gamma.setZero();
    // basis order (alpha, delta, alpha_dot, delta_dot)
    at.gamma(0, 0) = fa.cov(0, 0);
    at.gamma(0, 2) = at.gamma(2, 0) = fa.cov(0, 1);
    at.gamma(2, 2) = fa.cov(1, 1);
    at.gamma(1, 1) = fd.cov(0, 0);
    at.gamma(1, 3) = at.gamma(3, 1) = fd.cov(0, 1);
    at.gamma(3, 3) = fd.cov(1, 1);
    return at;
}

// Observer state at t_bar per Poincare's prescription: fit a quadratic
// through the geocentric station offsets at the observation times, then add
// the Earth ephemeris at t_bar.
inline void interpolate_observer(const std::vector<Observation>& obs,
                                 const EphemerisProvider& eph, Epoch t_bar,
                                 Vec3& q, Vec3& q_dot) {
    const int m = static_cast<int>(obs.size());
    if (m < 1) throw std::runtime_error("interpolate_observer: no observations");
    int degree = std::min(m - 1, 2);
    std::vector<double> dt(m);
    std::vector<Vec3> off(m);
    for (int i = 0; i < m; ++i) {
        dt[i] = obs[i].time.mjd - t_bar.mjd;
        off[i] = eph.station_geocentric(obs[i].station_id, obs[i].time);
    }
    Vec3 p_fit{0, 0, 0}, v_fit{0, 0, 0};
    if (degree == 0) {
        p_fit = off[0];
    } else {
        std::vector<double> ones(m, 1.0);
        double coords[3];
        double rates[3];
        for (int c = 0; c < 3; ++c) {
            std::vector<double> y(m);
            for (int i = 0; i < m; ++i)
                y[i] = (c == 0 ? off[i].x : (c == 1 ? off[i].y : off[i].z));
            auto f = detail::fit_coordinate(dt, y, ones, degree);
            coords[c] = f.value;
            rates[c] = f.rate;
        }
        p_fit = {coords[0], coords[1], coords[2]};
        v_fit = {rates[0], rates[1], rates[2]};
    }
    Vec3 ep, ev;
    eph.earth_heliocentric(t_bar, ep, ev);
    q = ep + p_fit;
    q_dot = ev + v_fit;
}

// fit + observer state in one step
inline Attributable make_attributable(const std::vector<Observation>& obs, int degree,
                                      const EphemerisProvider& eph) {
    Attributable a = fit_attributable(obs, degree);
    interpolate_observer(obs, eph, a.epoch, a.q, a.q_dot);
    return a;
}

} // namespace klink
