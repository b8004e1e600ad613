// Calibration run for the filter thresholds (d_max, q_max, curv_max).
// Generates the default synthetic survey, evaluates the great-circle metric
// and the symmetric quadratic fit on every same-object pair and a sample of
// cross-object pairs, and prints the percentiles used to pick defaults that
// retain >= 99% of true pairs.  Not part of the test suite; run by hand:
//   klink_calibrate [n_objects] [seed]

#include <algorithm>
#include <cstdio>
#include <vector>

#include "klink/simkit.hpp"

using namespace klink;

static double pct(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    size_t i = size_t(p * (v.size() - 1) + 0.5);
    return v[i];
}

int main(int argc, char** argv) {
    PopulationSpec spec;
    if (argc > 1) spec.n_objects = std::atoi(argv[1]);
    uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 12345;

    AnalyticEphemeris eph;
    auto pop = generate_population(spec, seed);
    auto survey = synthesize_observations(pop, eph, spec, seed + 1);

    struct Fitted {
        std::string id;
        Attributable at;
    };
    std::vector<Fitted> fitted;
    for (const auto& tr : survey.tracklets)
        fitted.push_back({tr.object_id,
                          make_attributable(tr.obs, int(tr.obs.size()) - 1, eph)});

    std::vector<double> td, tq, tc, fd, fq, fc;
    for (size_t i = 0; i < fitted.size(); ++i) {
        for (size_t j = i + 1; j < fitted.size(); ++j) {
            if (!time_span_filter(fitted[i].at.epoch, fitted[j].at.epoch)) continue;
            auto m = great_circle_metric(fitted[i].at, fitted[j].at);
            if (m.undefined) continue;
            auto f = symmetric_lls_fit(fitted[i].at, fitted[j].at);
            bool same = fitted[i].id == fitted[j].id;
            (same ? td : fd).push_back(m.d);
            (same ? tq : fq).push_back(f.sqrt_q);
            (same ? tc : fc).push_back(std::abs(f.curvature_term));
        }
    }

    std::printf("true pairs: %zu   cross pairs: %zu\n", td.size(), fd.size());
    std::printf("%-18s %12s %12s %12s | %12s %12s\n", "statistic", "true p50",
                "true p99", "true max", "cross p01", "cross p50");
    auto row = [&](const char* name, std::vector<double>& t, std::vector<double>& f) {
        std::printf("%-18s %12.6g %12.6g %12.6g | %12.6g %12.6g\n", name,
                    pct(t, 0.50), pct(t, 0.99), pct(t, 1.0), pct(f, 0.01),
                    pct(f, 0.50));
    };
    row("d_metric [rad]", td, fd);
    row("sqrtQ", tq, fq);
    row("|curv| [rad/d^2]", tc, fc);
    return 0;
}
