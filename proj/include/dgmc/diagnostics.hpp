#pragma once

// Per-step dissipation bookkeeping and the monitors built on sampled
// records: the energy-dissipation identity, the De Giorgi inequality and
// Hoelder continuity of the phase volume.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dgmc/allen_cahn.hpp"
#include "dgmc/double_well.hpp"
#include "dgmc/energy.hpp"
#include "dgmc/grid.hpp"
#include "dgmc/varifold.hpp"

namespace dgmc {

struct DiagnosticsRecord {
    double t = 0.0;
    double E_eps = 0.0;
    double mass = 0.0;
    double dissip_V = 0.0;     // 1/2 int int V^2 d omega dt
    double dissip_V_ac = 0.0;  // 1/2 int int eps (du/dt)^2 dx dt
    double dissip_H = 0.0;     // 1/2 int int |H_eps|^2 / eps dx dt
    double disc_L1 = 0.0;
    double disc_max = 0.0;
    double volume = 0.0;        // Lebesgue measure of {u > 1/2}
    double volume_sigma = 0.0;  // sigma * volume
    double de_giorgi_slack = 0.0;  // slack(0, t)
    double edi_residual = 0.0;     // residual(0, t)
    double E_rel = 0.0;
    double E_bulk = 0.0;
    double tilt = 0.0;
    double rho_defect = 0.0;
};

/// Everything one step contributes, evaluated at the half step.
struct StepDissipation {
    double V = 0.0;    // 1/2 int V^2 d omega, per unit time
    double Vac = 0.0;  // 1/2 int eps (du/dt)^2
    double H = 0.0;    // 1/2 int |H_eps|^2 / eps
    double pointwise_excess = 0.0;  // max over cells with discrepancy <= 0 of V^2 w - eps (du/dt)^2
    ScalarField speed;   // V
    ScalarField weight;  // |grad psi| at the midpoint
};

inline StepDissipation step_dissipation(const DiffuseState& cur, const DiffuseState& next, double dt) {
    const double eps = cur.eps;
    const GridSpec& spec = cur.u.spec;
    StepDissipation out;
    const ScalarField um = midpoint(cur.u, next.u);
    out.weight = build_varifold(um).weight;
    out.speed = normal_speed(cur, next, dt);
    const ScalarField mu = chemical_potential(um, eps);
    const ScalarField g2 = grad_sq_symmetric(um);
    std::vector<double> a(spec.size()), b(spec.size()), c(spec.size());
    double excess = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const double ut = (next.u.data[i] - cur.u.data[i]) / dt;
        const double v2w = out.speed.data[i] * out.speed.data[i] * out.weight.data[i];
        a[i] = 0.5 * v2w;
        b[i] = 0.5 * eps * ut * ut;
        c[i] = 0.5 * mu.data[i] * mu.data[i] / eps;
        const double disc = 0.5 * eps * g2.data[i] - DoubleWell::W(um.data[i]) / eps;
        if (disc <= 0.0) excess = std::max(excess, v2w - eps * ut * ut);
    }
    const double hd = spec.cell_volume();
    out.V = pairwise_sum(a) * hd;
    out.Vac = pairwise_sum(b) * hd;
    out.H = pairwise_sum(c) * hd;
    out.pointwise_excess = excess;
    return out;
}

/// slack(s, t) = mass(s) - mass(t) - [dissip_V + dissip_H]_s^t.
inline double de_giorgi_slack(const DiagnosticsRecord& s, const DiagnosticsRecord& t) {
    return s.mass - t.mass - (t.dissip_V - s.dissip_V) - (t.dissip_H - s.dissip_H);
}

/// |E(t) + [dissip_V_ac + dissip_H]_s^t - E(s)| / max(E(s), floor).
/// The dissipations are running totals, so once E(s) drops below their
/// rounding level only an absolute floor keeps the ratio meaningful.
inline double edi_residual(const DiagnosticsRecord& s, const DiagnosticsRecord& t, double floor = 0.0) {
    const double den = std::max(s.E_eps, floor);
    if (!(den > 0.0)) return 0.0;
    const double d = (t.dissip_V_ac - s.dissip_V_ac) + (t.dissip_H - s.dissip_H);
    return std::abs(t.E_eps + d - s.E_eps) / den;
}

/// Energy floor of edi_check, relative to the initial energy.
inline constexpr double kEdiFloorRel = 1e-6;

struct IntervalWorst {
    double value = 0.0;
    std::size_t s = 0, t = 0;
};

/// Worst energy-dissipation residual over all sampled intervals.
inline IntervalWorst edi_check(const std::vector<DiagnosticsRecord>& rec) {
    IntervalWorst w;
    if (rec.empty()) return w;
    const double floor = kEdiFloorRel * rec.front().E_eps;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        for (std::size_t j = i + 1; j < rec.size(); ++j) {
            const double r = edi_residual(rec[i], rec[j], floor);
            if (r > w.value) w = {r, i, j};
        }
    }
    return w;
}

struct DeGiorgiReport {
    double min_slack = 0.0;     // over all sampled (s, t)
    double final_slack = 0.0;   // slack(0, T)
    double mass0 = 0.0;
    std::size_t worst_s = 0, worst_t = 0;
    std::vector<double> slack_from_start;  // slack(0, t_k)

    double min_rel() const { return mass0 > 0.0 ? min_slack / mass0 : 0.0; }
    double final_rel() const { return mass0 > 0.0 ? final_slack / mass0 : 0.0; }
    bool pass(double tol = 0.05) const { return min_slack >= -tol * mass0; }
};

inline DeGiorgiReport de_giorgi_check(const std::vector<DiagnosticsRecord>& rec) {
    DeGiorgiReport r;
    if (rec.empty()) return r;
    r.mass0 = rec.front().mass;
    r.min_slack = rec.size() > 1 ? std::numeric_limits<double>::infinity() : 0.0;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        r.slack_from_start.push_back(de_giorgi_slack(rec.front(), rec[i]));
        for (std::size_t j = i + 1; j < rec.size(); ++j) {
            const double s = de_giorgi_slack(rec[i], rec[j]);
            if (s < r.min_slack) {
                r.min_slack = s;
                r.worst_s = i;
                r.worst_t = j;
            }
        }
    }
    r.final_slack = r.slack_from_start.back();
    return r;
}

/// Worst sigma |A(s) ^ A(t)| / (sqrt2 mass(0) sqrt(t - s)) over sampled pairs
/// with t > s.
inline IntervalWorst volume_continuity_check(const std::vector<double>& times, const std::vector<PhaseBits>& phases,
                                             double mass0, double cell_volume,
                                             double sigma = DoubleWell::sigma()) {
    if (times.size() != phases.size()) throw std::invalid_argument("times and phase slices differ in length");
    IntervalWorst w;
    if (!(mass0 > 0.0)) return w;
    for (std::size_t i = 0; i < times.size(); ++i) {
        for (std::size_t j = i + 1; j < times.size(); ++j) {
            const double dt = times[j] - times[i];
            if (!(dt > 0.0)) continue;
            const double vol = static_cast<double>(phases[i].symmetric_difference(phases[j])) * cell_volume;
            const double r = sigma * vol / (std::sqrt(2.0) * mass0 * std::sqrt(dt));
            if (r > w.value) w = {r, i, j};
        }
    }
    return w;
}

/// Diffuse counterpart for data that are not well prepared, where the sharp
/// phase of a thin layer can vanish within one step: worst
/// int |psi(t) - psi(s)| / (sqrt2 E(0) sqrt(t - s)) over sampled pairs.
inline IntervalWorst diffuse_volume_continuity_check(const std::vector<double>& times,
                                                     const std::vector<ScalarField>& psi, double energy0) {
    if (times.size() != psi.size()) throw std::invalid_argument("times and psi slices differ in length");
    IntervalWorst w;
    if (!(energy0 > 0.0)) return w;
    std::vector<double> diff;
    for (std::size_t i = 0; i < times.size(); ++i) {
        for (std::size_t j = i + 1; j < times.size(); ++j) {
            const double dt = times[j] - times[i];
            if (!(dt > 0.0)) continue;
            require_same_grid(psi[i].spec, psi[j].spec, "diffuse_volume_continuity_check");
            diff.resize(psi[i].size());
            for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = std::abs(psi[j].data[k] - psi[i].data[k]);
            const double r = pairwise_sum(diff) * psi[i].spec.cell_volume() / (std::sqrt(2.0) * energy0 * std::sqrt(dt));
            if (r > w.value) w = {r, i, j};
        }
    }
    return w;
}

}  // namespace dgmc
