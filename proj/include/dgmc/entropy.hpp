#pragma once

// Relative entropy and bulk error of a varifold against a calibrated
// shrinking sphere, the coercivity quantities they control, and the
// Gronwall-type stability fit.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dgmc/calibration.hpp"
#include "dgmc/double_well.hpp"
#include "dgmc/grid.hpp"
#include "dgmc/sphere.hpp"
#include "dgmc/varifold.hpp"

namespace dgmc {

/// int (1 - p . xi) d mu.
inline double relative_entropy(const DiscreteVarifold& v, const CalibrationFields& cal) {
    require_same_grid(v.spec, cal.xi.spec, "relative_entropy");
    std::vector<double> e(v.spec.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = (1.0 - dot(v.normal.at(i), cal.xi.at(i))) * v.weight.data[i];
    return pairwise_sum(e) * v.spec.cell_volume();
}

/// mass + sigma int chi div xi: equal to the first form whenever the
/// varifold is compatible with chi.
inline double relative_entropy_form2(const DiscreteVarifold& v, const PhaseIndicator& chi,
                                     const CalibrationFields& cal) {
    require_same_grid(v.spec, chi.chi.spec, "relative_entropy_form2");
    const ScalarField div = divergence(cal.xi);
    std::vector<double> e(v.spec.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = chi.chi.data[i] * div.data[i];
    return v.mass() + v.sigma * pairwise_sum(e) * v.spec.cell_volume();
}

/// sigma int |chi - chi_ball| |theta|.
inline double bulk_error(const PhaseIndicator& chi, const CalibrationFields& cal,
                         double sigma = DoubleWell::sigma()) {
    require_same_grid(chi.chi.spec, cal.theta.spec, "bulk_error");
    std::vector<double> e(chi.chi.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        e[i] = std::abs(chi.chi.data[i] - cal.ball.data[i]) * std::abs(cal.theta.data[i]);
    }
    return sigma * pairwise_sum(e) * chi.chi.spec.cell_volume();
}

struct EntropyRecord {
    double t = 0.0;
    double E_rel = 0.0;
    double E_rel_form2 = 0.0;
    double E_bulk = 0.0;
    double tilt_excess = 0.0;           // int |p - xi|^2 d mu            <= 2 E
    double dist_moment = 0.0;           // int min{1, dist^2/r_c^2} d omega <= E
    double bulk_signed = 0.0;           // sigma int (chi - chi_ball) theta == E_bulk
    double bulk_dist = 0.0;             // sigma int |chi - chi_ball| min{1, dist/r_c} <= E_bulk
    double multiplicity_defect = 0.0;   // int (1 - rho) d omega        <= E
    double perimeter_tilt = 0.0;        // sigma int_{d*A} |n - xi|^2    <= 2 E
    double perimeter_dist = 0.0;        // sigma int_{d*A} min{1, dist^2/r_c^2} <= E
    double length_deficit = 0.0;        // int (1 - |xi|) d mu
    double tilt_identity_gap = 0.0;     // worst cellwise gap in the tilt identity
    double mass = 0.0;
};

/// Evaluates every coercivity quantity. The tilt identity
///   |p - xi|^2 = 2(1 - p.xi) - (1 - |xi|^2)
/// is checked cellwise for |p| = 1 and its worst violation stored.
inline EntropyRecord coercivity_report(const DiscreteVarifold& v, const PhaseIndicator& chi,
                                       const CalibrationFields& cal, const ClassicalSphere& sph,
                                       const MultiplicityField& rho) {
    require_same_grid(v.spec, cal.xi.spec, "coercivity_report");
    const GridSpec& spec = v.spec;
    const double hd = spec.cell_volume();
    const std::size_t N = spec.size();
    const VectorField gchi = chi.smoothed_gradient();
    const ScalarField per = magnitude(gchi);
    const double pfloor = 1e-12 * max_abs(per);

    std::vector<double> tilt(N), dm(N), bs(N), bd(N), pt(N), pdist(N), ld(N), e1(N);
    double gap = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const auto p = v.normal.at(i);
        const auto xi = cal.xi.at(i);
        const double w = v.weight.data[i];
        const double pxi = dot(p, xi);
        const double xi2 = dot(xi, xi);
        std::array<double, 3> diff{p[0] - xi[0], p[1] - xi[1], p[2] - xi[2]};
        const double t2 = dot(diff, diff);
        gap = std::max(gap, std::abs(t2 - (2.0 * (1.0 - pxi) - (1.0 - xi2))));
        const double rd = std::min(1.0, cal.dist.data[i] / sph.r_c);
        e1[i] = (1.0 - pxi) * w;
        tilt[i] = t2 * w;
        dm[i] = rd * rd * w;
        ld[i] = (1.0 - std::sqrt(xi2)) * w;
        const double dchi = chi.chi.data[i] - cal.ball.data[i];
        bs[i] = dchi * cal.theta.data[i];
        bd[i] = std::abs(dchi) * rd;
        if (per.data[i] > pfloor) {
            std::array<double, 3> nd{0.0, 0.0, 0.0};
            for (int k = 0; k < spec.dim(); ++k) nd[k] = gchi.comp[k][i] / per.data[i] - xi[k];
            pt[i] = dot(nd, nd) * per.data[i];
        } else {
            pt[i] = 0.0;
        }
        pdist[i] = rd * rd * per.data[i];
    }
    EntropyRecord r;
    r.t = cal.time;
    r.E_rel = pairwise_sum(e1) * hd;
    r.E_rel_form2 = relative_entropy_form2(v, chi, cal);
    r.E_bulk = bulk_error(chi, cal, v.sigma);
    r.tilt_excess = pairwise_sum(tilt) * hd;
    r.dist_moment = pairwise_sum(dm) * hd;
    r.bulk_signed = v.sigma * pairwise_sum(bs) * hd;
    r.bulk_dist = v.sigma * pairwise_sum(bd) * hd;
    r.multiplicity_defect = rho.defect();
    r.perimeter_tilt = v.sigma * pairwise_sum(pt) * hd;
    r.perimeter_dist = v.sigma * pairwise_sum(pdist) * hd;
    r.length_deficit = pairwise_sum(ld) * hd;
    r.tilt_identity_gap = gap;
    r.mass = v.mass();
    return r;
}

/// One coercivity inequality lhs <= factor * E_rel + slack.
struct CoercivityCheck {
    const char* name;
    double lhs;
    double rhs;
    bool pass;
};

/// The seven inequalities (the third is an identity, checked to rounding)
/// with additive slack `slack` for the discretised ones.
inline std::vector<CoercivityCheck> coercivity_checks(const EntropyRecord& r, double slack) {
    std::vector<CoercivityCheck> out;
    auto add = [&](const char* name, double lhs, double rhs) { out.push_back({name, lhs, rhs, lhs <= rhs}); };
    add("tilt <= 2E", r.tilt_excess, 2.0 * r.E_rel + 1e-14);
    add("dist moment <= E", r.dist_moment, r.E_rel + 1e-14);
    const double id_tol = 1e-12 * std::max(1.0, r.E_bulk);
    out.push_back({"signed bulk == E_bulk", std::abs(r.bulk_signed - r.E_bulk), id_tol,
                   std::abs(r.bulk_signed - r.E_bulk) <= id_tol});
    add("bulk dist <= E_bulk", r.bulk_dist, r.E_bulk + 1e-14);
    add("multiplicity defect <= E", r.multiplicity_defect, r.E_rel + slack);
    add("perimeter tilt <= 2E", r.perimeter_tilt, 2.0 * r.E_rel + slack);
    add("perimeter dist <= E", r.perimeter_dist, r.E_rel + slack);
    return out;
}

struct GronwallSample {
    double t = 0.0;
    double E_rel = 0.0;
    double E_bulk = 0.0;
};

struct GronwallFit {
    double C_fit_rel = 0.0;
    double C_fit_bulk = 0.0;
    double E0 = 0.0;
    double ET = 0.0;
    bool finite = true;
};

/// Smallest C >= 0 with
///   E(T_i) <= E(0) + C int_0^{T_i} E + slack
///   E_bulk(T_i) <= E_bulk(0) + E(0) + C int_0^{T_i} (E_bulk + E) + slack
/// at every sample, the integrals by the trapezoidal rule. Both estimates
/// are one-sided, so the fit is a direct scan rather than a regression.
inline GronwallFit gronwall_monitor(const std::vector<GronwallSample>& series, double fit_slack) {
    if (series.size() < 10) throw std::invalid_argument("gronwall_monitor needs at least 10 samples");
    GronwallFit f;
    f.E0 = series.front().E_rel;
    f.ET = series.back().E_rel;
    const double B0 = series.front().E_bulk;
    double intE = 0.0, intEB = 0.0;
    for (std::size_t i = 1; i < series.size(); ++i) {
        const double dt = series[i].t - series[i - 1].t;
        intE += 0.5 * dt * (series[i].E_rel + series[i - 1].E_rel);
        intEB += 0.5 * dt * (series[i].E_rel + series[i - 1].E_rel + series[i].E_bulk + series[i - 1].E_bulk);
        const double exr = series[i].E_rel - f.E0 - fit_slack;
        if (exr > 0.0) f.C_fit_rel = std::max(f.C_fit_rel, intE > 0.0 ? exr / intE : INFINITY);
        const double exb = series[i].E_bulk - B0 - f.E0 - fit_slack;
        if (exb > 0.0) f.C_fit_bulk = std::max(f.C_fit_bulk, intEB > 0.0 ? exb / intEB : INFINITY);
    }
    f.finite = std::isfinite(f.C_fit_rel) && std::isfinite(f.C_fit_bulk);
    return f;
}

/// Sharp varifold of the classical sphere itself: weight sigma times a
/// cosine-smoothed surface delta of half-width 2h, normal n_I.
inline DiscreteVarifold analytic_varifold(const ClassicalSphere& sph, double t, const GridSpec& spec) {
    DiscreteVarifold v;
    v.spec = spec;
    v.time = t;
    v.weight = ScalarField(spec, 0.0);
    v.normal = VectorField(spec, 0.0);
    const double w = 2.0 * spec.h();
    // The radial delta is scaled by (r/|x-c|)^(d-1) so that its integral over
    // the layer equals the sphere's area exactly in the continuum.
    const double r = sph.radius(t);
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const auto x = spec.position(i);
        const double s = sph.signed_distance(spec, x, t);
        v.normal.set(i, sph.inward_normal(spec, x));
        if (std::abs(s) < w) {
            const double rho = r - s;
            const double delta = (1.0 + std::cos(std::numbers::pi * s / w)) / (2.0 * w);
            v.weight.data[i] = v.sigma * delta * std::pow(r / rho, sph.dim - 1);
        }
    }
    return v;
}

/// Exact ball indicator as a phase.
inline PhaseIndicator analytic_phase(const CalibrationFields& cal) { return {cal.ball}; }

}  // namespace dgmc
