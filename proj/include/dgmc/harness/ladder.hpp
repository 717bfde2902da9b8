#pragma once

// Refinement ladders: one run per (eps, n) rung and the trend report that
// compares them.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgmc/calibration.hpp"
#include "dgmc/harness/config.hpp"
#include "dgmc/harness/run.hpp"

namespace dgmc::harness {

/// The per-rung numbers a trend report needs; persisted in run.json so
/// `report` can rebuild the table from disk.
struct RungSummary {
    std::string scenario;
    double eps = 0.0;
    int n = 0;
    double T_end = 0.0;
    double probe_time = 0.0;
    double equipartition_L1 = 0.0;     // discrepancy L1 at the first step past T_end / 2
    double E_rel0 = 0.0;
    double multiplicity_defect = 0.0;  // largest sampled value over the run, relative to mass(0)
    double de_giorgi_final = 0.0;      // slack(0, T) / mass(0)
    double transport_diffuse = 0.0;    // worst diffuse transport residual
    double C_fit_rel = 0.0;
    double C_fit_bulk = 0.0;
    bool pass = false;
};

inline RungSummary rung_summary(const RunSummary& s) {
    RungSummary r;
    r.scenario = s.config.scenario;
    r.eps = s.config.eps;
    r.n = s.config.n;
    r.T_end = s.T_end;
    r.probe_time = s.probe_time;
    r.equipartition_L1 = s.probe_L1;
    if (!s.records.empty()) {
        r.E_rel0 = s.records.front().E_rel;
        const double m0 = s.records.front().mass;
        double md = 0.0;
        for (const auto& rec : s.records) md = std::max(md, rec.rho_defect);
        r.multiplicity_defect = m0 > 0.0 ? md / m0 : 0.0;
    }
    r.de_giorgi_final = s.de_giorgi.final_rel();
    for (const auto& t : s.transport_diffuse) r.transport_diffuse = std::max(r.transport_diffuse, t.residual());
    r.C_fit_rel = s.gronwall.C_fit_rel;
    r.C_fit_bulk = s.gronwall.C_fit_bulk;
    r.pass = s.pass();
    return r;
}

/// Relative floor below which a monotone trend is considered resolved:
/// values this small are rounding, not signal.
inline constexpr double kTrendFloor = 1e-9;

struct TrendRow {
    std::string name;
    std::string expectation;  // "decreasing" or "stable"
    std::vector<double> values;
    bool pass = false;
};

struct LadderReport {
    std::string scenario;
    std::vector<RungSummary> rungs;  // coarse to fine
    std::vector<TrendRow> trends;
    bool refined = true;  // false: rungs do not refine eps ("no refinement")

    bool pass() const {
        return refined && std::all_of(trends.begin(), trends.end(), [](const TrendRow& t) { return t.pass; }) &&
               std::all_of(rungs.begin(), rungs.end(), [](const RungSummary& r) { return r.pass; });
    }
};

/// Strictly decreasing along the ladder, or already at the floor.
inline bool strictly_decreasing(const std::vector<double>& v, double floor = kTrendFloor) {
    for (std::size_t k = 1; k < v.size(); ++k) {
        if (v[k] <= floor && v[k - 1] <= floor) continue;
        if (!(v[k] < v[k - 1])) return false;
    }
    return true;
}

/// Every consecutive pair refinement-stable.
inline bool consecutive_stable(const std::vector<double>& v) {
    for (std::size_t k = 1; k < v.size(); ++k) {
        if (!refinement_stable(v[k - 1], v[k])) return false;
    }
    return true;
}

inline LadderReport ladder_report(std::vector<RungSummary> rungs) {
    if (rungs.size() < 2) throw std::invalid_argument("ladder requires ≥ 2 rungs");
    for (const auto& r : rungs) {
        if (r.scenario != rungs.front().scenario) {
            throw std::invalid_argument("ladder mixes scenarios '" + rungs.front().scenario + "' and '" + r.scenario + "'");
        }
    }
    std::stable_sort(rungs.begin(), rungs.end(), [](const RungSummary& a, const RungSummary& b) { return a.eps > b.eps; });
    LadderReport rep;
    rep.scenario = rungs.front().scenario;
    for (std::size_t k = 1; k < rungs.size(); ++k) {
        if (!(rungs[k].eps < rungs[k - 1].eps)) rep.refined = false;
    }
    auto column = [&](double RungSummary::*f) {
        std::vector<double> v;
        for (const auto& r : rungs) v.push_back(r.*f);
        return v;
    };
    auto row = [&](std::string name, std::string expectation, std::vector<double> v, bool pass) {
        rep.trends.push_back({std::move(name), std::move(expectation), std::move(v), rep.refined && pass});
    };
    const auto L1 = column(&RungSummary::equipartition_L1);
    row("equipartition L1", "decreasing", L1, strictly_decreasing(L1, 0.0));
    const auto E0 = column(&RungSummary::E_rel0);
    row("E_rel(0)", "decreasing", E0, strictly_decreasing(E0));
    const auto md = column(&RungSummary::multiplicity_defect);
    row("multiplicity defect", "decreasing", md, strictly_decreasing(md, 1e-3));
    std::vector<double> dg;
    for (const auto& r : rungs) dg.push_back(std::abs(r.de_giorgi_final));
    row("De Giorgi slack", "decreasing", dg, strictly_decreasing(dg));
    const auto tr = column(&RungSummary::transport_diffuse);
    row("diffuse transport residual", "decreasing", tr, strictly_decreasing(tr));
    const auto cr = column(&RungSummary::C_fit_rel);
    row("C_fit_rel", "stable", cr, consecutive_stable(cr));
    const auto cb = column(&RungSummary::C_fit_bulk);
    row("C_fit_bulk", "stable", cb, consecutive_stable(cb));
    rep.rungs = std::move(rungs);
    return rep;
}

/// Configuration of rung k of a ladder config.
inline RunConfig rung_config(const RunConfig& base, std::size_t k) {
    if (k >= base.ladder.size()) throw ConfigError("ladder rung out of range");
    RunConfig c = base;
    c.eps = base.ladder[k].eps;
    c.n = base.ladder[k].n;
    c.ladder.clear();
    return c;
}

}  // namespace dgmc::harness
