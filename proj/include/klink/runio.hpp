#pragma once

// Serialization and run drivers shared by the command-line tool and its
// tests: attributable/orbit JSON records, the flat config-file format, and
// the deterministic parallel pair-linking driver.

#include <atomic>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "klink/attributable.hpp"
#include "klink/ephemeris.hpp"
#include "klink/filters.hpp"
#include "klink/linkage.hpp"

namespace klink {

using nlohmann::json;
using nlohmann::ordered_json;

// angles are reported in degrees with six decimal places
inline double round6(double x) { return std::round(x * 1e6) / 1e6; }

struct NamedAttributable {
    std::string id;
    Attributable at;
};

inline json attributable_to_json(const NamedAttributable& na) {
    const Attributable& a = na.at;
    json j;
    j["id"] = na.id;
    j["station"] = a.station_id;
    j["epoch_mjd"] = a.epoch.mjd;
    j["alpha_rad"] = a.alpha;
    j["delta_rad"] = a.delta;
    j["alpha_dot_rad_day"] = a.alpha_dot;
    j["delta_dot_rad_day"] = a.delta_dot;
    j["observer_position_au"] = {a.q.x, a.q.y, a.q.z};
    j["observer_velocity_au_day"] = {a.q_dot.x, a.q_dot.y, a.q_dot.z};
    std::vector<double> g;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) g.push_back(a.gamma(r, c));
    j["gamma_rad2"] = g;
    return j;
}

inline NamedAttributable attributable_from_json(const json& j, int index) {
    NamedAttributable na;
    na.id = j.contains("id") ? j["id"].get<std::string>()
                             : "a" + std::to_string(index);
    Attributable& a = na.at;
    if (j.contains("station")) a.station_id = j["station"].get<std::string>();
    a.epoch = {j.at("epoch_mjd").get<double>()};
    a.alpha = j.at("alpha_rad").get<double>();
    a.delta = j.at("delta_rad").get<double>();
    a.alpha_dot = j.at("alpha_dot_rad_day").get<double>();
    a.delta_dot = j.at("delta_dot_rad_day").get<double>();
    auto qp = j.at("observer_position_au");
    auto qv = j.at("observer_velocity_au_day");
    a.q = {qp.at(0).get<double>(), qp.at(1).get<double>(), qp.at(2).get<double>()};
    a.q_dot = {qv.at(0).get<double>(), qv.at(1).get<double>(), qv.at(2).get<double>()};
    if (j.contains("gamma_rad2")) {
        auto g = j["gamma_rad2"];
        if (g.size() != 16)
            throw std::runtime_error("attributable " + na.id +
                                     ": gamma_rad2 must have 16 entries");
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) a.gamma(r, c) = g.at(4 * r + c).get<double>();
    } else if (j.contains("sigma_rad")) {
        double s = j["sigma_rad"].get<double>();
        a.gamma = s * s * Eigen::Matrix4d::Identity();
    } else {
        throw std::runtime_error("attributable " + na.id +
                                 ": needs gamma_rad2 or sigma_rad");
    }
    return na;
}

inline std::vector<NamedAttributable> attributables_from_json(const json& root) {
    if (!root.contains("attributables"))
        throw std::runtime_error("attributables JSON: missing 'attributables' array");
    std::vector<NamedAttributable> out;
    int i = 0;
    for (const auto& j : root["attributables"]) out.push_back(attributable_from_json(j, i++));
    return out;
}

inline json elements_to_json(const KeplerianElements& el) {
    json j;
    j["a_au"] = round6(el.a);
    j["e"] = round6(el.e);
    j["i_deg"] = round6(el.inc / constants::deg);
    j["node_deg"] = round6(wrap_two_pi(el.Omega) / constants::deg);
    j["arg_peri_deg"] = round6(wrap_two_pi(el.omega) / constants::deg);
    j["ell_deg"] = round6(wrap_two_pi(el.ell) / constants::deg);
    j["epoch_mjd"] = el.epoch.mjd;
    return j;
}

inline json orbit_to_json(const std::string& id1, const std::string& id2,
                          const LinkageSolution& s) {
    json j;
    j["id1"] = id1;
    j["id2"] = id2;
    j["rho_au"] = {s.rho1, s.rho2};
    j["rho_dot_au_day"] = {s.rho1_dot, s.rho2_dot};
    j["epochs_tilde_mjd"] = {s.t_tilde1.mjd, s.t_tilde2.mjd};
    j["frame"] = "ecliptic J2000";
    j["elements1"] = elements_to_json(s.elements1);
    j["elements2"] = elements_to_json(s.elements2);
    j["delta"] = {{"d_omega_deg", round6(s.delta.d_omega / constants::deg)},
                  {"d_ell_deg", round6(s.delta.d_ell / constants::deg)}};
    j["norm"] = s.norm;
    j["provenance"] = s.provenance;
    j["condition"] = s.condition;
    j["covariance_basis"] =
        "alpha1,delta1,alpha_dot1,delta_dot1,rho1,rho_dot1,d_omega,d_ell";
    std::vector<double> cov;
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) cov.push_back(s.covariance(r, c));
    j["covariance"] = cov;
    return j;
}

inline json filter_config_to_json(const FilterConfig& c) {
    json j;
    j["dt_min_days"] = c.dt_min;
    j["dt_max_days"] = c.dt_max;
    j["d_max_rad"] = c.d_max;
    j["q_max"] = c.q_max;
    j["curv_max"] = c.curv_max;
    return j;
}

inline json linkage_config_to_json(const LinkageConfig& c) {
    json j;
    j["engine"] = c.engine == LinkEngine::DFT_Resultant ? "dft"
                  : c.engine == LinkEngine::NormalForm  ? "nf"
                                                        : "both";
    j["rho_min_au"] = c.rho_min;
    j["spurious_tol"] = c.spurious_tol;
    j["chi_max"] = c.chi_max;
    j["extended_precision"] = c.extended_precision;
    return j;
}

// Flat config file: `key = value` lines, optional `[section]` headers that
// prefix the keys ("filter.dt_max"); '#' starts a comment.
inline std::map<std::string, std::string> parse_config(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line, section;
    auto trim = [](std::string s) {
        size_t b = s.find_first_not_of(" \t\r");
        size_t e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto cut = line.find('#');
        if (cut != std::string::npos) line = line.substr(0, cut);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) +
                                     ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error("config line " + std::to_string(lineno) +
                                     ": empty key");
        kv[section.empty() ? key : section + "." + key] = val;
    }
    return kv;
}

inline void apply_config(const std::map<std::string, std::string>& kv,
                         FilterConfig& fc, LinkageConfig& lc) {
    auto num = [&](const char* key, double& out) {
        auto it = kv.find(key);
        if (it != kv.end()) out = std::stod(it->second);
    };
    num("filter.dt_min", fc.dt_min);
    num("filter.dt_max", fc.dt_max);
    num("filter.d_max", fc.d_max);
    num("filter.q_max", fc.q_max);
    num("filter.curv_max", fc.curv_max);
    num("linkage.rho_min", lc.rho_min);
    num("linkage.spurious_tol", lc.spurious_tol);
    num("linkage.chi_max", lc.chi_max);
    auto it = kv.find("linkage.engine");
    if (it != kv.end()) {
        if (it->second == "dft") lc.engine = LinkEngine::DFT_Resultant;
        else if (it->second == "nf") lc.engine = LinkEngine::NormalForm;
        else if (it->second == "both") lc.engine = LinkEngine::Both;
        else throw std::runtime_error("config: unknown engine: " + it->second);
    }
    it = kv.find("linkage.extended_precision");
    if (it != kv.end()) lc.extended_precision = it->second == "true" || it->second == "1";
}

struct LinkRunResult {
    std::vector<FilterRecord> filter_report;
    json orbits = json::array();   // accepted solutions, normalized order
    json rejected = json::array(); // audit log per linked pair
};

// Deterministic parallel pair driver: every pair is an independent task;
// per-pair outputs land in a slot vector indexed by pair id, so the merged
// result is identical for any worker count.
inline LinkRunResult link_pairs(const std::vector<NamedAttributable>& ats,
                                const FilterConfig& fcfg, const LinkageConfig& lcfg,
                                int jobs = 1, bool skip_filters = false) {
    struct PairOut {
        FilterRecord rec;
        std::vector<json> orbits;
        json rejected;
    };
    std::vector<std::pair<size_t, size_t>> pairs;
    for (size_t i = 0; i < ats.size(); ++i)
        for (size_t j = i + 1; j < ats.size(); ++j) pairs.push_back({i, j});

    std::vector<PairOut> slots(pairs.size());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            size_t k = next.fetch_add(1);
            if (k >= pairs.size()) return;
            auto [i, j] = pairs[k];
            PairOut& out = slots[k];
            out.rec = evaluate_pair(ats[i].at, ats[j].at, fcfg, ats[i].id, ats[j].id);
            if (!out.rec.passed && !skip_filters) continue;
            auto res = link(ats[i].at, ats[j].at, lcfg);
            for (const auto& s : res.solutions)
                out.orbits.push_back(orbit_to_json(ats[i].id, ats[j].id, s));
            if (!res.diag.rejected.empty() ||
                res.diag.degeneracy.kind != DegeneracyKind::None) {
                json r;
                r["id1"] = ats[i].id;
                r["id2"] = ats[j].id;
                if (res.diag.degeneracy.kind != DegeneracyKind::None)
                    r["degeneracy"] = res.diag.degeneracy.name();
                r["candidates"] = res.diag.candidate_count;
                r["dropped"] = res.diag.rejected;
                out.rejected = std::move(r);
            }
        }
    };
    jobs = std::max(1, jobs);
    std::vector<std::thread> ws;
    for (int t = 1; t < jobs; ++t) ws.emplace_back(worker);
    worker();
    for (auto& w : ws) w.join();

    LinkRunResult res;
    for (auto& s : slots) {
        res.filter_report.push_back(std::move(s.rec));
        for (auto& o : s.orbits) res.orbits.push_back(std::move(o));
        if (!s.rejected.is_null()) res.rejected.push_back(std::move(s.rejected));
    }
    return res;
}

// ephemeris factory: "analytic" or a path to a table file
inline std::unique_ptr<EphemerisProvider> load_ephemeris(const std::string& source) {
    if (source == "analytic") return std::make_unique<AnalyticEphemeris>();
    std::ifstream f(source);
    if (!f) throw std::runtime_error("cannot open ephemeris file: " + source);
    return std::make_unique<TableEphemeris>(f);
}

} // namespace klink
