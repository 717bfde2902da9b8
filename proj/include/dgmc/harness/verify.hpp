#pragma once

// The invariant suite behind `verify`: static checks on a scenario's initial
// data, its calibration and a short burst of steps. Nothing here runs the
// full evolution.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dgmc/allen_cahn.hpp"
#include "dgmc/calibration.hpp"
#include "dgmc/double_well.hpp"
#include "dgmc/energy.hpp"
#include "dgmc/entropy.hpp"
#include "dgmc/harness/run.hpp"
#include "dgmc/harness/scenario.hpp"
#include "dgmc/harness/test_fields.hpp"
#include "dgmc/varifold.hpp"

namespace dgmc::harness {

inline constexpr double kSigmaQuadratureTol = 1e-10;
inline constexpr double kInitialEnergyTol = 0.02;
inline constexpr double kFirstVariationTol = 0.05;
inline constexpr double kEvolWeightRawTol = 0.05;
inline constexpr double kAnalyticEntropyFrac = 0.02;
inline constexpr double kRhoLower = 0.9;
inline constexpr double kRhoUpper = 1.0;
inline constexpr int kRandomFieldCount = 5;
inline constexpr int kBurstSteps = 5;
/// Largest calibration grid per dimension; the refinement partner has half
/// the cells per axis.
inline constexpr int kCalibrationMaxN2d = 512;
inline constexpr int kCalibrationMaxN3d = 128;

struct VerifyReport {
    std::vector<Criterion> checks;

    bool pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const Criterion& c) { return c.pass; });
    }
};

/// sigma by composite Simpson quadrature of sqrt(2W) on [0, 1]; exact for
/// the quadratic integrand up to rounding.
inline double sigma_by_quadrature(int intervals = 2000) {
    const double hq = 1.0 / intervals;
    double s = DoubleWell::sqrt2W(0.0) + DoubleWell::sqrt2W(1.0);
    for (int k = 1; k < intervals; ++k) s += (k % 2 ? 4.0 : 2.0) * DoubleWell::sqrt2W(k * hq);
    return s * hq / 3.0;
}

/// Fitted calibration constants at t on the grid with n cells per axis, next
/// to the same constants on n/2.
struct CalibrationPair {
    CalibrationReport coarse, fine;
    int n_coarse = 0, n_fine = 0;

    bool stable() const {
        const FittedConstant* a[] = {&coarse.transport_xi, &coarse.transport_length_xi, &coarse.mean_curvature,
                                     &coarse.evol_weight};
        const FittedConstant* b[] = {&fine.transport_xi, &fine.transport_length_xi, &fine.mean_curvature,
                                     &fine.evol_weight};
        for (int k = 0; k < 4; ++k) {
            if (!refinement_stable(a[k]->value, b[k]->value)) return false;
        }
        return true;
    }

    /// Worst of the exact inequalities on both grids (<= 0 expected).
    double exact_violation() const {
        double v = -INFINITY;
        for (const auto* r : {&coarse, &fine}) {
            v = std::max({v, r->length_violation, r->theta_lower_violation, r->theta_upper_violation, r->max_xi - 1.0});
        }
        return v;
    }
};

inline CalibrationPair calibration_pair(const ClassicalSphere& sph, double L, int n_fine, double t, double dt) {
    CalibrationPair p;
    p.n_fine = n_fine;
    p.n_coarse = n_fine / 2;
    p.coarse = verify_calibration(sph, t, GridSpec(sph.dim, L, p.n_coarse), dt);
    p.fine = verify_calibration(sph, t, GridSpec(sph.dim, L, p.n_fine), dt);
    return p;
}

inline VerifyReport verify(const RunConfig& cfg) {
    const Scenario sc = make_scenario(cfg);
    VerifyReport rep;
    auto add = [&](std::string name, double value, double tol, std::string rel, bool pass) {
        rep.checks.push_back({std::move(name), value, tol, std::move(rel), pass});
    };
    const GridSpec& spec = sc.spec;
    const DiffuseState& s0 = sc.initial;
    const double sigma = DoubleWell::sigma();

    const double qerr = std::abs(sigma_by_quadrature() - sigma);
    add("surface tension quadrature", qerr, kSigmaQuadratureTol, "<=", qerr <= kSigmaQuadratureTol);

    const auto [mn, mx] = std::minmax_element(s0.u.data.begin(), s0.u.data.end());
    const double range = std::max(-*mn, *mx - 1.0);
    add("initial maximum range", range, kRangeTol, "<=", range <= kRangeTol);

    const double E0 = energy(s0.u, s0.eps);
    const DiscreteVarifold v0 = build_varifold(s0);
    const double mass0 = v0.mass();
    // The Modica-Mortola bound mass <= E holds up to the stencil mismatch
    // between central and one-sided differences, O(h^2) relative.
    const double mm_slack = std::pow(spec.h() / cfg.eps, 2) * E0;
    add("mass below energy", mass0 - E0, mm_slack, "<=", mass0 - E0 <= mm_slack);

    if (sc.well_prepared) {
        const auto d = discrepancy(s0.u, s0.eps);
        const double tol = discrepancy_tolerance(spec.h(), cfg.eps);
        add("initial discrepancy bound", d.max / tol, 1.0, "<=", d.max <= tol);
    }

    double reference_energy = NAN;
    if (sc.kind == ScenarioKind::StandingWave1d) reference_energy = 2.0 * sigma;
    if (sc.kind == ScenarioKind::ShrinkingCircle || sc.kind == ScenarioKind::ShrinkingSphere) {
        reference_energy = sigma * sc.sphere->perimeter(0.0);
    }
    if (sc.kind == ScenarioKind::Empty) {
        add("initial energy", E0, 0.0, "==", E0 == 0.0);
    } else if (!std::isnan(reference_energy)) {
        const double e = std::abs(E0 / reference_energy - 1.0);
        add("initial energy", e, kInitialEnergyTol, "<=", e <= kInitialEnergyTol);
    }

    const bool sphere_flow = sc.sphere && sc.kind != ScenarioKind::MultiplicityTwo;
    if (sphere_flow) {
        const ClassicalSphere& sph = *sc.sphere;
        const auto c = sph.center;

        DiscreteVarifold vc = v0;
        attach_curvature(vc, s0);
        const double fv_const = first_variation_residual(vc, constant_test_field(spec, c, {1.0, 0.5, 0.25}));
        add("first variation, constant field", fv_const, kFirstVariationTol, "<", fv_const < kFirstVariationTol);
        const double fv_rad = first_variation_residual(vc, radial_test_field(spec, c));
        add("first variation, radial field", fv_rad, kFirstVariationTol, "<", fv_rad < kFirstVariationTol);
        const auto fields = random_test_fields(spec, c, kRandomFieldCount, static_cast<std::uint64_t>(cfg.seed));
        double fv_rand = 0.0, compat = 0.0;
        const PhaseIndicator chi = phase_indicator(s0.u);
        for (const auto& B : fields) {
            fv_rand = std::max(fv_rand, first_variation_residual(vc, B));
            compat = std::max(compat, compatibility_defect(v0, chi, B) / max_abs(B));
        }
        add("first variation, random fields", fv_rand, kFirstVariationTol, "<", fv_rand < kFirstVariationTol);
        // Equipartition defect plus O(h) perimeter error.
        const double compat_tol = discrepancy(s0.u, s0.eps).L1 + spec.h() / cfg.r_c * mass0;
        add("compatibility", compat, compat_tol, "<=", compat <= compat_tol);

        // Calibration identities at the start and the middle of the horizon.
        const int ncal = std::min(spec.n(), cfg.dim == 2 ? kCalibrationMaxN2d : kCalibrationMaxN3d);
        const double dtc = std::min(sc.dt, 0.25 * sc.T_end);
        double worst_exact = -INFINITY, uncut = 0.0;
        bool stable = true, finite = true;
        for (double t : {dtc, 0.5 * sc.T_end}) {
            const auto pair = calibration_pair(sph, cfg.L, ncal, t, dtc);
            worst_exact = std::max(worst_exact, pair.exact_violation());
            uncut = std::max(uncut, pair.fine.evol_weight_uncut.raw_max);
            stable = stable && pair.stable();
            for (const auto* r : {&pair.coarse, &pair.fine}) {
                for (const auto* f : {&r->transport_xi, &r->transport_length_xi, &r->mean_curvature, &r->evol_weight}) {
                    finite = finite && std::isfinite(f->value);
                }
            }
        }
        add("calibration exact inequalities", worst_exact, 1e-12, "<=", worst_exact <= 1e-12);
        add("calibration constants refinement-stable", stable ? 1.0 : 0.0, 1.0, "==", stable && finite);
        add("weight transport", uncut, kEvolWeightRawTol, "<", uncut < kEvolWeightRawTol);

        // Entropy at t = 0.
        const auto cal = calibration_fields(sph, 0.0, spec);
        const auto av = analytic_varifold(sph, 0.0, spec);
        const double floor = relative_entropy(av, cal);
        const double floor_tol = kAnalyticEntropyFrac * sigma * sph.perimeter(0.0);
        add("analytic entropy floor", floor, floor_tol, "<", floor < floor_tol);
        const auto mult = multiplicity_field(v0, chi, cfg.box > 0 ? cfg.box : default_box(spec, cfg.eps), cfg.eps);
        const EntropyRecord er = coercivity_report(v0, chi, cal, sph, mult);
        const double slack = kCoercivitySlack * spec.h() / cfg.r_c * er.mass;
        double worst = -INFINITY;
        for (const auto& ck : coercivity_checks(er, slack)) worst = std::max(worst, ck.lhs - ck.rhs);
        add("initial coercivity", worst, 0.0, "<=", worst <= 0.0);
        add("tilt identity", er.tilt_identity_gap, 1e-12, "<=", er.tilt_identity_gap <= 1e-12);

        double rlo = INFINITY, rhi = -INFINITY;
        for (std::size_t b = 0; b < mult.rho.size(); ++b) {
            if (mult.empty[b]) continue;
            rlo = std::min(rlo, mult.rho[b]);
            rhi = std::max(rhi, std::min(mult.rho[b], 1.0));
        }
        add("unit density", rlo, kRhoLower, ">=", rlo >= kRhoLower && rhi <= kRhoUpper);
    }

    // A short burst: the energy must not increase.
    AllenCahnStepper stepper(spec, cfg.eps, sc.scheme);
    DiffuseState cur = s0;
    double rise = -INFINITY, prevE = E0;
    for (int k = 0; k < kBurstSteps; ++k) {
        cur = stepper.step(cur, k);
        const double E = energy(cur.u, cur.eps);
        rise = std::max(rise, E - prevE);
        prevE = E;
    }
    const double rise_tol = 1e-12 * std::max(E0, 1.0);
    add("energy decrease", rise, rise_tol, "<=", rise <= rise_tol);
    return rep;
}

}  // namespace dgmc::harness
