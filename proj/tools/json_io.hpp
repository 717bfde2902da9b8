#pragma once

// JSON documents written by the CLI: summary.json (five fixed keys),
// run.json (everything needed to audit a run and rebuild ladder reports)
// and ladder.json. No wall-clock values, so identical inputs give
// identical files.

#include <cmath>
#include <string>

#include <json.hpp>

#include "dgmc/harness/ladder.hpp"
#include "dgmc/harness/run.hpp"
#include "dgmc/harness/verify.hpp"

namespace dgmc::cli {

using nlohmann::ordered_json;

/// NaN and infinities become null.
inline ordered_json number(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

inline ordered_json criteria_json(const std::vector<harness::Criterion>& cs) {
    ordered_json a = ordered_json::array();
    for (const auto& c : cs) {
        a.push_back({{"name", c.name},
                     {"value", number(c.value)},
                     {"relation", c.relation},
                     {"tolerance", number(c.tolerance)},
                     {"pass", c.pass}});
    }
    return a;
}

inline ordered_json summary_json(const harness::RunSummary& s) {
    ordered_json j;
    if (s.has_gronwall) {
        j["C_fit_rel"] = number(s.gronwall.C_fit_rel);
        j["C_fit_bulk"] = number(s.gronwall.C_fit_bulk);
        j["E0"] = number(s.gronwall.E0);
        j["ET"] = number(s.gronwall.ET);
    } else {
        j["C_fit_rel"] = nullptr;
        j["C_fit_bulk"] = nullptr;
        j["E0"] = nullptr;
        j["ET"] = nullptr;
    }
    j["pass"] = s.pass();
    return j;
}

inline ordered_json rung_json(const harness::RungSummary& r) {
    return {{"scenario", r.scenario},
            {"eps", r.eps},
            {"n", r.n},
            {"T_end", r.T_end},
            {"probe_time", r.probe_time},
            {"equipartition_L1", number(r.equipartition_L1)},
            {"E_rel0", number(r.E_rel0)},
            {"multiplicity_defect", number(r.multiplicity_defect)},
            {"de_giorgi_final", number(r.de_giorgi_final)},
            {"transport_diffuse", number(r.transport_diffuse)},
            {"C_fit_rel", number(r.C_fit_rel)},
            {"C_fit_bulk", number(r.C_fit_bulk)},
            {"pass", r.pass}};
}

inline double get_number(const ordered_json& j, const char* key) {
    const auto& v = j.at(key);
    return v.is_null() ? NAN : v.get<double>();
}

inline harness::RungSummary rung_from_json(const ordered_json& j) {
    harness::RungSummary r;
    r.scenario = j.at("scenario").get<std::string>();
    r.eps = j.at("eps").get<double>();
    r.n = j.at("n").get<int>();
    r.T_end = j.at("T_end").get<double>();
    r.probe_time = j.at("probe_time").get<double>();
    r.equipartition_L1 = get_number(j, "equipartition_L1");
    r.E_rel0 = get_number(j, "E_rel0");
    r.multiplicity_defect = get_number(j, "multiplicity_defect");
    r.de_giorgi_final = get_number(j, "de_giorgi_final");
    r.transport_diffuse = get_number(j, "transport_diffuse");
    r.C_fit_rel = get_number(j, "C_fit_rel");
    r.C_fit_bulk = get_number(j, "C_fit_bulk");
    r.pass = j.at("pass").get<bool>();
    return r;
}

inline ordered_json run_json(const harness::RunSummary& s) {
    ordered_json j;
    j["config"] = harness::to_text(s.config);
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(s.hash));
    j["content_hash"] = hash;
    j["dt"] = s.dt;
    j["T_end"] = s.T_end;
    j["steps"] = s.steps;
    j["completed"] = s.completed;
    j["criteria"] = criteria_json(s.criteria);
    if (!s.records.empty()) {
        const auto& r = s.records.back();
        j["final"] = {{"t", r.t},           {"E_eps", r.E_eps},         {"mass", r.mass},
                      {"dissipV", r.dissip_V}, {"dissipVac", r.dissip_V_ac}, {"dissipH", r.dissip_H},
                      {"volume", r.volume},  {"E_rel", r.E_rel},          {"E_bulk", r.E_bulk}};
    }
    j["rung"] = rung_json(harness::rung_summary(s));
    j["summary"] = summary_json(s);
    return j;
}

inline ordered_json ladder_json(const harness::LadderReport& rep) {
    ordered_json j;
    j["scenario"] = rep.scenario;
    j["refined"] = rep.refined;
    ordered_json rungs = ordered_json::array();
    for (const auto& r : rep.rungs) rungs.push_back(rung_json(r));
    j["rungs"] = rungs;
    ordered_json trends = ordered_json::array();
    for (const auto& t : rep.trends) {
        ordered_json v = ordered_json::array();
        for (double x : t.values) v.push_back(number(x));
        trends.push_back({{"name", t.name}, {"expectation", t.expectation}, {"values", v}, {"pass", t.pass}});
    }
    j["trends"] = trends;
    j["pass"] = rep.pass();
    return j;
}

inline ordered_json verify_json(const harness::VerifyReport& rep) {
    return {{"checks", criteria_json(rep.checks)}, {"pass", rep.pass()}};
}

}  // namespace dgmc::cli
