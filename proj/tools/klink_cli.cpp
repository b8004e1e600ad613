// Command-line front end: fit attributables from observations, filter pairs,
// link, run synthetic-survey experiments, and render reports.
//
// Exit codes: 0 success, 1 usage/config error, 2 input parse error,
// 3 internal numerical fault.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "klink/runio.hpp"
#include "klink/simkit.hpp"

using namespace klink;

namespace {

std::ostream& open_output(std::ofstream& file, const std::string& path) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw CLI::ValidationError("--out", "cannot open " + path);
    return file;
}

json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    json j;
    f >> j;
    return j;
}

int cmd_attributables(const std::string& obs_path, const std::string& eph_source,
                      int degree, const std::string& out_path) {
    std::ifstream f(obs_path);
    if (!f) throw std::runtime_error("cannot open " + obs_path);
    auto obs = parse_observations_csv(f);
    auto eph = load_ephemeris(eph_source);
    auto tracklets = group_tracklets(std::move(obs));
    json arr = json::array();
    int n = 0;
    for (const auto& tr : tracklets) {
        ++n;
        char id[32];
        std::snprintf(id, sizeof(id), "trk%04d", n);
        if (int(tr.size()) < degree + 1) {
            std::cerr << "warning: " << id << " has " << tr.size()
                      << " observation(s), needs " << degree + 1 << "; skipped\n";
            continue;
        }
        arr.push_back(attributable_to_json({id, make_attributable(tr, degree, *eph)}));
    }
    json out;
    out["attributables"] = arr;
    std::ofstream file;
    open_output(file, out_path) << out.dump(2) << "\n";
    return 0;
}

int cmd_filter(const std::string& in_path, const FilterConfig& fcfg,
               const std::string& out_path) {
    auto ats = attributables_from_json(read_json_file(in_path));
    std::ofstream file;
    auto& os = open_output(file, out_path);
    os << filter_report_header() << "\n";
    for (size_t i = 0; i < ats.size(); ++i)
        for (size_t j = i + 1; j < ats.size(); ++j)
            os << filter_report_row(evaluate_pair(ats[i].at, ats[j].at, fcfg,
                                                  ats[i].id, ats[j].id))
               << "\n";
    return 0;
}

int cmd_link(const std::string& in_path, const FilterConfig& fcfg,
             const LinkageConfig& lcfg, int jobs, bool skip_filters,
             const std::string& out_path, const std::string& report_path) {
    auto ats = attributables_from_json(read_json_file(in_path));
    auto run = link_pairs(ats, fcfg, lcfg, jobs, skip_filters);
    json out;
    out["config"] = {{"filter", filter_config_to_json(fcfg)},
                     {"linkage", linkage_config_to_json(lcfg)},
                     {"skip_filters", skip_filters}};
    out["orbits"] = run.orbits;
    out["rejected"] = run.rejected;
    std::ofstream file;
    open_output(file, out_path) << out.dump(2) << "\n";
    if (!report_path.empty()) {
        std::ofstream rf(report_path);
        if (!rf) throw std::runtime_error("cannot open " + report_path);
        rf << filter_report_header() << "\n";
        for (const auto& r : run.filter_report) rf << filter_report_row(r) << "\n";
    }
    return 0;
}

json report_to_json(const ExperimentReport& rep, const PopulationSpec& spec,
                    const FilterConfig& fcfg, const LinkageConfig& lcfg,
                    uint64_t seed) {
    json j;
    j["config"] = {{"n_objects", spec.n_objects},
                   {"neo_fraction", spec.neo_fraction},
                   {"tracklets_per_object", spec.tracklets_per_object},
                   {"obs_per_tracklet", spec.obs_per_tracklet},
                   {"survey_span_days", spec.survey_span_days},
                   {"noise_sigma_arcsec", spec.noise_sigma_arcsec},
                   {"station", spec.station},
                   {"seed", seed},
                   {"filter", filter_config_to_json(fcfg)},
                   {"linkage", linkage_config_to_json(lcfg)}};
    j["objects"] = rep.objects;
    j["objects_linkable"] = rep.objects_linkable;
    j["objects_linked"] = rep.objects_linked;
    j["pairs_total"] = rep.pairs_total;
    j["pairs_past_filters"] = rep.pairs_past_filters;
    j["true_links_found"] = rep.true_links_found;
    j["false_links_accepted"] = rep.false_links_accepted;
    j["total_accepted"] = rep.total_accepted;
    j["efficiency"] = rep.efficiency;
    j["accuracy"] = rep.accuracy;
    j["efficiency_mb"] = rep.efficiency_mb;
    j["efficiency_neo"] = rep.efficiency_neo;
    j["true_norms"] = rep.true_norms;
    j["false_norms"] = rep.false_norms;
    j["log"] = rep.log;
    return j;
}

int cmd_simulate(const PopulationSpec& spec, const FilterConfig& fcfg,
                 const LinkageConfig& lcfg, uint64_t seed,
                 const std::string& eph_source, const std::string& out_path) {
    auto eph = load_ephemeris(eph_source);
    auto rep = run_experiment(spec, fcfg, lcfg, seed, *eph);
    std::ofstream file;
    open_output(file, out_path) << report_to_json(rep, spec, fcfg, lcfg, seed).dump(2)
                                << "\n";
    return 0;
}

int cmd_report(const std::string& in_path) {
    json j = read_json_file(in_path);
    auto get = [&](const char* k) { return j.value(k, 0.0); };
    std::printf("synthetic survey report\n");
    std::printf("  objects            %8d\n", j.value("objects", 0));
    std::printf("  linkable (>=2 trk) %8d\n", j.value("objects_linkable", 0));
    std::printf("  linked             %8d\n", j.value("objects_linked", 0));
    std::printf("  pairs total        %8d\n", j.value("pairs_total", 0));
    std::printf("  past filters       %8d\n", j.value("pairs_past_filters", 0));
    std::printf("  accepted links     %8d (true %d, false %d)\n",
                j.value("total_accepted", 0), j.value("true_links_found", 0),
                j.value("false_links_accepted", 0));
    std::printf("  efficiency         %8.4f (MB %.4f, NEO %.4f)\n", get("efficiency"),
                get("efficiency_mb"), get("efficiency_neo"));
    std::printf("  accuracy           %8.4f\n", get("accuracy"));
    if (j.contains("log") && !j["log"].empty())
        std::printf("  log entries        %8zu\n", j["log"].size());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"short-arc attributable linkage toolkit"};
    app.require_subcommand(1);

    std::string eph_source = "analytic";
    app.add_option("--ephemeris", eph_source,
                   "'analytic' or path to an ephemeris table file");
    std::string config_path;
    app.add_option("--config", config_path, "flat key=value config file");

    FilterConfig fcfg;
    LinkageConfig lcfg;

    // attributables
    auto* sub_at = app.add_subcommand("attributables",
                                      "fit attributables from an observation CSV");
    std::string obs_path, at_out;
    int degree = 2;
    sub_at->add_option("--obs", obs_path, "observation CSV")->required();
    sub_at->add_option("--degree", degree, "fit degree (1 or 2)")
        ->check(CLI::Range(1, 2));
    sub_at->add_option("-o,--out", at_out, "output JSON ('-' = stdout)");

    // filter
    auto* sub_filter = app.add_subcommand("filter", "pair filter report (CSV)");
    std::string f_in, f_out;
    sub_filter->add_option("--in", f_in, "attributables JSON")->required();
    sub_filter->add_option("-o,--out", f_out, "output CSV ('-' = stdout)");

    // link
    auto* sub_link = app.add_subcommand("link", "link attributable pairs");
    std::string l_in, l_out, l_report;
    int jobs = 1;
    bool skip_filters = false;
    std::string engine = "both";
    sub_link->add_option("--in", l_in, "attributables JSON")->required();
    sub_link->add_option("-o,--out", l_out, "orbits JSON ('-' = stdout)");
    sub_link->add_option("--report", l_report, "filter report CSV path");
    sub_link->add_option("--jobs", jobs, "worker count")->check(CLI::PositiveNumber);
    sub_link->add_flag("--skip-filters", skip_filters,
                       "link every pair regardless of the filter verdict");
    sub_link->add_option("--chi-max", lcfg.chi_max, "norm acceptance threshold");
    sub_link->add_option("--rho-min", lcfg.rho_min, "minimum range, AU");
    sub_link->add_option("--engine", engine, "dft | nf | both");
    sub_link->add_option("--dt-max", fcfg.dt_max, "filter: max pair time span, days");
    sub_link->add_option("--dt-min", fcfg.dt_min, "filter: min pair time span, days");

    // simulate
    auto* sub_sim = app.add_subcommand("simulate", "synthetic survey experiment");
    PopulationSpec spec;
    uint64_t seed = 1;
    std::string s_out;
    sub_sim->add_option("--objects", spec.n_objects, "population size")
        ->check(CLI::PositiveNumber);
    sub_sim->add_option("--neo-fraction", spec.neo_fraction, "NEO-like fraction")
        ->check(CLI::Range(0.0, 1.0));
    sub_sim->add_option("--tracklets", spec.tracklets_per_object,
                        "tracklets per object");
    sub_sim->add_option("--noise", spec.noise_sigma_arcsec, "noise sigma, arcsec");
    sub_sim->add_option("--span", spec.survey_span_days, "survey window, days");
    sub_sim->add_option("--station", spec.station, "observatory code");
    sub_sim->add_option("--false-rate", spec.false_tracklet_rate,
                        "mismatched-tracklet injection rate");
    sub_sim->add_option("--seed", seed, "rng seed");
    sub_sim->add_option("-o,--out", s_out, "report JSON ('-' = stdout)");
    sub_sim->add_option("--chi-max", lcfg.chi_max, "norm acceptance threshold");

    // report
    auto* sub_rep = app.add_subcommand("report", "render a report JSON as text");
    std::string r_in;
    sub_rep->add_option("--in", r_in, "report JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_path.empty()) {
            std::ifstream cf(config_path);
            if (!cf) {
                std::cerr << "error: cannot open config " << config_path << "\n";
                return 1;
            }
            apply_config(parse_config(cf), fcfg, lcfg);
        }
        if (engine == "dft") lcfg.engine = LinkEngine::DFT_Resultant;
        else if (engine == "nf") lcfg.engine = LinkEngine::NormalForm;
        else if (engine == "both") lcfg.engine = LinkEngine::Both;
        else {
            std::cerr << "error: unknown engine '" << engine << "'\n";
            return 1;
        }

        if (*sub_at) return cmd_attributables(obs_path, eph_source, degree, at_out);
        if (*sub_filter) return cmd_filter(f_in, fcfg, f_out);
        if (*sub_link)
            return cmd_link(l_in, fcfg, lcfg, jobs, skip_filters, l_out, l_report);
        if (*sub_sim) return cmd_simulate(spec, fcfg, lcfg, seed, eph_source, s_out);
        if (*sub_rep) return cmd_report(r_in);
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "input parse error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "numerical fault: " << e.what() << "\n";
        return 3;
    } catch (const std::runtime_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
