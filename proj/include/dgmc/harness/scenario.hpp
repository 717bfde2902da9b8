#pragma once

// Scenario library: initial diffuse data plus the classical comparison flow.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "dgmc/allen_cahn.hpp"
#include "dgmc/double_well.hpp"
#include "dgmc/grid.hpp"
#include "dgmc/harness/config.hpp"
#include "dgmc/sphere.hpp"

namespace dgmc::harness {

enum class ScenarioKind { StandingWave1d, ShrinkingCircle, ShrinkingSphere, MultiplicityTwo, PerturbedCircle, Empty };

inline ScenarioKind scenario_kind(const std::string& id) {
    if (id == "standing-wave-1d") return ScenarioKind::StandingWave1d;
    if (id == "shrinking-circle") return ScenarioKind::ShrinkingCircle;
    if (id == "shrinking-sphere") return ScenarioKind::ShrinkingSphere;
    if (id == "multiplicity-two") return ScenarioKind::MultiplicityTwo;
    if (id == "perturbed-circle") return ScenarioKind::PerturbedCircle;
    if (id == "empty") return ScenarioKind::Empty;
    throw ConfigError("unknown scenario '" + id + "'");
}

/// Dimension each scenario runs in.
inline int scenario_dim(ScenarioKind k, int requested) {
    switch (k) {
        case ScenarioKind::StandingWave1d: return 1;
        case ScenarioKind::ShrinkingSphere: return 3;
        case ScenarioKind::Empty: return requested;
        default: return 2;
    }
}

/// Default horizon of the standing wave, which has no extinction time.
inline constexpr double kStandingWaveHorizon = 0.01;

struct Scenario {
    ScenarioKind kind;
    GridSpec spec;
    DiffuseState initial;
    std::optional<ClassicalSphere> sphere;  // comparison flow
    double T_end = 0.0;
    double dt = 0.0;
    StepScheme scheme;
    bool well_prepared = true;  // initial data from a single optimal profile
};

/// Resolves auto values and validates every invariant before any compute.
inline Scenario make_scenario(const RunConfig& c) {
    const ScenarioKind kind = scenario_kind(c.scenario);
    if (c.dim != scenario_dim(kind, c.dim)) {
        throw ConfigError("scenario '" + c.scenario + "' runs in dimension " + std::to_string(scenario_dim(kind, c.dim)));
    }
    if (!(c.eps > 0.0)) throw ConfigError("eps must be positive");
    if (c.stride < 0) throw ConfigError("stride must be non-negative");
    if (c.checkpoint_every < 0) throw ConfigError("checkpoint_every must be non-negative");
    Scenario s{kind, GridSpec(c.dim, c.L, c.n), {}, std::nullopt, 0.0, 0.0, {}, true};
    const GridSpec& spec = s.spec;
    if (c.eps < 2.0 * spec.h() * (1.0 - 1e-12)) {
        throw ConfigError("eps = " + std::to_string(c.eps) + " under-resolves the layer (need eps >= 2h = " +
                          std::to_string(2.0 * spec.h()) + ")");
    }

    ClassicalSphere sph;
    sph.dim = c.dim;
    sph.center = {0.5 * c.L, 0.5 * c.L, 0.5 * c.L};
    sph.r0 = c.r0;
    sph.r_c = c.r_c;
    sph.eps_min = c.eps;

    switch (kind) {
        case ScenarioKind::StandingWave1d: {
            PlanarSlab slab{0.5 * c.L, 0.25 * c.L};
            s.initial = well_prepared_init(slab, c.eps, spec);
            break;
        }
        case ScenarioKind::ShrinkingCircle:
        case ScenarioKind::ShrinkingSphere: {
            sph.validate();
            s.initial = well_prepared_init(sph, c.eps, spec);
            s.sphere = sph;
            break;
        }
        case ScenarioKind::PerturbedCircle: {
            sph.validate();
            if (!(c.delta >= 0.0)) throw ConfigError("delta must be non-negative");
            ClassicalSphere bumped = sph;
            bumped.r0 = sph.r0 + c.delta * c.eps;
            if (c.delta * c.eps >= 0.5 * c.r_c) throw ConfigError("radius offset must stay inside half the tube");
            s.initial = well_prepared_init(bumped, c.eps, spec);
            s.sphere = sph;
            break;
        }
        case ScenarioKind::MultiplicityTwo: {
            sph.validate();
            if (!(c.gap > 0.0)) throw ConfigError("gap must be positive");
            const double half = c.gap * c.eps;
            if (0.5 * c.L - (c.r0 + half) < 8.0 * c.eps) throw ConfigError("interface lies within 8 eps of the periodic seam");
            // A thin ring of phase 1 around the sphere: two parallel layers
            // that attract, merge and annihilate.
            s.initial.eps = c.eps;
            s.initial.u = profile_from_distance(spec, c.eps, [&](const std::array<double, 3>& x) {
                return half - std::abs(norm(periodic_delta(spec, x, sph.center)) - c.r0);
            });
            s.initial.validate();
            s.sphere = sph;
            s.well_prepared = false;
            break;
        }
        case ScenarioKind::Empty: {
            s.initial.eps = c.eps;
            s.initial.u = ScalarField(spec, 0.0);
            s.initial.validate();
            break;
        }
    }

    const auto kindS = c.scheme == "explicit" ? StepScheme::Kind::Explicit : StepScheme::Kind::SemiImplicit;
    s.dt = c.dt ? *c.dt : StepScheme::auto_dt(spec, c.eps, kindS);
    s.scheme = {kindS, s.dt};
    s.scheme.validate(spec, c.eps);

    if (c.T_end) {
        s.T_end = *c.T_end;
    } else if (s.sphere) {
        s.T_end = 0.8 * s.sphere->t_strong();
    } else {
        s.T_end = kStandingWaveHorizon;
    }
    if (!(s.T_end > 0.0)) throw ConfigError("T_end must be positive");
    if (s.sphere && s.T_end > s.sphere->t_strong() * (1.0 + 1e-12)) {
        throw ConfigError("T_end exceeds the classical horizon " + std::to_string(s.sphere->t_strong()));
    }
    return s;
}

/// Number of steps to reach T_end (the last step may overshoot by < dt).
inline long step_count(const Scenario& s) { return static_cast<long>(std::ceil(s.T_end / s.dt - 1e-9)); }

/// Smallest divisor of n whose side covers 8 eps.
inline int default_box(const GridSpec& spec, double eps) {
    for (int b = 1; b <= spec.n(); ++b) {
        if (spec.n() % b == 0 && b * spec.h() >= 8.0 * eps * (1.0 - 1e-12)) return b;
    }
    return spec.n();
}

}  // namespace dgmc::harness
