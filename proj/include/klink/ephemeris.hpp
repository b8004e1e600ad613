#pragma once

// Observer geometry: analytic Earth ephemeris, optional file-backed
// ephemeris table, and a ground-station model (geocentric position from
// station coordinates rotated by a simple sidereal formula).
//
// Frame convention: everything here is heliocentric equatorial J2000.

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "klink/core.hpp"

namespace klink {

class EphemerisProvider {
public:
    virtual ~EphemerisProvider() = default;
    // heliocentric equatorial J2000 position (AU) and velocity (AU/day)
    virtual void earth_heliocentric(Epoch t, Vec3& pos, Vec3& vel) const = 0;
    // geocentric equatorial J2000 station position (AU)
    virtual Vec3 station_geocentric(const std::string& station_id, Epoch t) const = 0;

    Vec3 observer_position(const std::string& station_id, Epoch t) const {
        Vec3 p, v;
        earth_heliocentric(t, p, v);
        return p + station_geocentric(station_id, t);
    }
};

// rotation equatorial J2000 <-> ecliptic J2000
inline Vec3 equatorial_to_ecliptic(const Vec3& v) {
    double e = constants::obliquity_j2000_deg * constants::deg;
    double ce = std::cos(e), se = std::sin(e);
    return {v.x, ce * v.y + se * v.z, -se * v.y + ce * v.z};
}

inline Vec3 ecliptic_to_equatorial(const Vec3& v) {
    double e = constants::obliquity_j2000_deg * constants::deg;
    double ce = std::cos(e), se = std::sin(e);
    return {v.x, ce * v.y - se * v.z, se * v.y + ce * v.z};
}

// Greenwich mean sidereal time, radians
inline double gmst_rad(Epoch t) {
    double d = (t.mjd + 2400000.5) - 2451545.0;
    double g = 280.46061837 + 360.98564736629 * d;
    return wrap_two_pi(g * constants::deg);
}

struct StationCatalog {
    struct Site {
        double lon_rad = 0.0;
        double lat_rad = 0.0;
        double alt_m = 0.0;
    };
    std::map<std::string, Site> sites;

    StationCatalog() {
        // bundled defaults; 500 is the geocenter
        sites["568"] = {204.5230 * constants::deg, 19.8230 * constants::deg, 4212.0};
        sites["G96"] = {249.2112 * constants::deg, 32.4425 * constants::deg, 2791.0};
        sites["703"] = {249.2672 * constants::deg, 32.4169 * constants::deg, 2510.0};
        sites["F51"] = {203.7440 * constants::deg, 20.7072 * constants::deg, 3052.0};
    }

    void load(std::istream& in) {
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ss(line);
            std::string code;
            double lon, lat, alt;
            if (!(ss >> code >> lon >> lat >> alt))
                throw std::runtime_error("station file: bad line: " + line);
            sites[code] = {lon * constants::deg, lat * constants::deg, alt};
        }
    }

    Vec3 geocentric(const std::string& code, Epoch t) const {
        if (code == "500" || code.empty()) return {0.0, 0.0, 0.0};
        auto it = sites.find(code);
        if (it == sites.end()) return {0.0, 0.0, 0.0}; // unknown: geocenter
        const Site& s = it->second;
        double r_km = 6378.137 + s.alt_m / 1000.0;
        double theta = gmst_rad(t) + s.lon_rad;
        double cl = std::cos(s.lat_rad), sl = std::sin(s.lat_rad);
        Vec3 p{r_km * cl * std::cos(theta), r_km * cl * std::sin(theta), r_km * sl};
        return p / constants::au_km;
    }
};

// Low-precision analytic Earth orbit (mean solar elements, good to a few
// 1e-4 AU); adequate as a self-contained default for desk-scale work.
class AnalyticEphemeris : public EphemerisProvider {
public:
    StationCatalog stations;

    void earth_heliocentric(Epoch t, Vec3& pos, Vec3& vel) const override {
        pos = earth_pos(t.mjd);
        const double h = 0.005;
        Vec3 p1 = earth_pos(t.mjd - h), p2 = earth_pos(t.mjd + h);
        vel = (p2 - p1) / (2.0 * h);
    }

    Vec3 station_geocentric(const std::string& station_id, Epoch t) const override {
        return stations.geocentric(station_id, t);
    }

private:
    static Vec3 earth_pos(double mjd) {
        using namespace constants;
        double T = (mjd - 51544.5) / 36525.0;
        double L0 = 280.46646 + 36000.76983 * T + 0.0003032 * T * T;
        double M = (357.52911 + 35999.05029 * T - 0.0001537 * T * T) * deg;
        double C = (1.914602 - 0.004817 * T - 0.000014 * T * T) * std::sin(M) +
                   (0.019993 - 0.000101 * T) * std::sin(2.0 * M) +
                   0.000289 * std::sin(3.0 * M);
        double lam_date = L0 + C; // true solar longitude, deg, equinox of date
        double lam = (lam_date - 1.39697 * T) * deg; // reduce to J2000 equinox
        double e = 0.016708634 - 0.000042037 * T;
        double nu = M + C * deg;
        double R = 1.000001018 * (1.0 - e * e) / (1.0 + e * std::cos(nu));
        // geocentric sun -> heliocentric earth
        Vec3 sun_ecl{R * std::cos(lam), R * std::sin(lam), 0.0};
        return ecliptic_to_equatorial(-sun_ecl);
    }
};

// File-backed ephemeris: `# frame=EQUJ2000` (or ECLJ2000) header, then
// whitespace-separated rows `mjd x y z vx vy vz` in AU, AU/day.  Cubic
// Hermite interpolation between bracketing rows.
class TableEphemeris : public EphemerisProvider {
public:
    StationCatalog stations;

    explicit TableEphemeris(std::istream& in) {
        std::string line;
        bool ecliptic = false;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (line[0] == '#') {
                if (line.find("frame=ECLJ2000") != std::string::npos) ecliptic = true;
                else if (line.find("frame=EQUJ2000") != std::string::npos) ecliptic = false;
                else if (line.find("frame=") != std::string::npos)
                    throw std::runtime_error("ephemeris table: unknown frame: " + line);
                continue;
            }
            std::istringstream ss(line);
            Row r;
            if (!(ss >> r.mjd >> r.p.x >> r.p.y >> r.p.z >> r.v.x >> r.v.y >> r.v.z))
                throw std::runtime_error("ephemeris table: bad row: " + line);
            if (ecliptic) {
                r.p = ecliptic_to_equatorial(r.p);
                r.v = ecliptic_to_equatorial(r.v);
            }
            rows_.push_back(r);
        }
        if (rows_.size() < 2)
            throw std::runtime_error("ephemeris table: need at least 2 rows");
        for (size_t i = 1; i < rows_.size(); ++i)
            if (rows_[i].mjd <= rows_[i - 1].mjd)
                throw std::runtime_error("ephemeris table: epochs must increase");
    }

    void earth_heliocentric(Epoch t, Vec3& pos, Vec3& vel) const override {
        if (t.mjd < rows_.front().mjd || t.mjd > rows_.back().mjd)
            throw std::out_of_range("ephemeris table: epoch outside table span");
        size_t i = 1;
        while (i + 1 < rows_.size() && rows_[i].mjd < t.mjd) ++i;
        const Row& a = rows_[i - 1];
        const Row& b = rows_[i];
        double h = b.mjd - a.mjd;
        double s = (t.mjd - a.mjd) / h;
        // cubic Hermite basis
        double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
        double h10 = s * (1 - s) * (1 - s);
        double h01 = s * s * (3 - 2 * s);
        double h11 = s * s * (s - 1);
        pos = h00 * a.p + (h10 * h) * a.v + h01 * b.p + (h11 * h) * b.v;
        double g00 = 6 * s * (s - 1) / h;
        double g10 = (1 - s) * (1 - 3 * s);
        double g01 = -6 * s * (s - 1) / h;
        double g11 = s * (3 * s - 2);
        vel = g00 * a.p + g10 * a.v + g01 * b.p + g11 * b.v;
    }

    Vec3 station_geocentric(const std::string& station_id, Epoch t) const override {
        return stations.geocentric(station_id, t);
    }

private:
    struct Row {
        double mjd;
        Vec3 p, v;
    };
    std::vector<Row> rows_;
};

} // namespace klink
