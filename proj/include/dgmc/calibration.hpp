#pragma once

// Calibration data of a shrinking sphere: clamped signed distance, the cutoff
// zeta, the extended normal xi, the velocity extension B and the weight
// theta, with finite-difference checks of their transport properties.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "dgmc/grid.hpp"
#include "dgmc/sphere.hpp"

namespace dgmc {

/// Quintic smoothstep 6x^5 - 15x^4 + 10x^3 on [0,1].
inline double smoothstep5(double x) {
    x = std::clamp(x, 0.0, 1.0);
    return x * x * x * (x * (6.0 * x - 15.0) + 10.0);
}

inline double smoothstep5_derivative(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    const double y = x * (1.0 - x);
    return 30.0 * y * y;
}

/// kappa = 1 on [-1/2, 1/2], 0 outside (-1, 1), C^2 quintic ramp between.
inline double cutoff_kappa(double r) {
    const double a = std::abs(r);
    return 1.0 - smoothstep5(2.0 * (a - 0.5));
}

inline double cutoff_kappa_derivative(double r) {
    const double a = std::abs(r);
    const double d = -2.0 * smoothstep5_derivative(2.0 * (a - 0.5));
    return r < 0.0 ? -d : d;
}

/// zeta(r) = (1 - r^2) kappa(r^2).
inline double cutoff_zeta(double r) { return (1.0 - r * r) * cutoff_kappa(r * r); }

inline double cutoff_zeta_derivative(double r) {
    const double r2 = r * r;
    return -2.0 * r * cutoff_kappa(r2) + (1.0 - r2) * cutoff_kappa_derivative(r2) * 2.0 * r;
}

/// theta_bar(r) = -sin(pi r / 2) on [-1, 1], clamped to -+1 outside.
inline double theta_bar(double r) {
    if (r <= -1.0) return 1.0;
    if (r >= 1.0) return -1.0;
    return -std::sin(std::numbers::pi * r / 2.0);
}

inline double theta_bar_derivative(double r) {
    if (r <= -1.0 || r >= 1.0) return 0.0;
    return -std::numbers::pi / 2.0 * std::cos(std::numbers::pi * r / 2.0);
}

/// Pointwise calibration quantities at x and time t.
struct CalibrationPoint {
    double s = 0.0;     // signed distance clamped to +-2 r_c
    double dist = 0.0;  // unclamped distance to the sphere
    std::array<double, 3> n{1.0, 0.0, 0.0};
    std::array<double, 3> xi{0.0, 0.0, 0.0};
    std::array<double, 3> B{0.0, 0.0, 0.0};
    double theta = 0.0;
    bool inside = false;  // in the ball (unclamped s > 0)
};

inline CalibrationPoint calibration_at(const ClassicalSphere& sph, const GridSpec& spec,
                                       const std::array<double, 3>& x, double t) {
    CalibrationPoint p;
    const double sraw = sph.signed_distance(spec, x, t);
    p.dist = std::abs(sraw);
    p.inside = sraw > 0.0;
    p.s = std::clamp(sraw, -2.0 * sph.r_c, 2.0 * sph.r_c);
    p.n = sph.inward_normal(spec, x);
    const double z = cutoff_zeta(p.s / sph.r_c);
    // -Lap s at the nearest point is (d-1)/r(t), the normal speed of the
    // shrinking sphere, so B carries the interface velocity.
    const double speed = (sph.dim - 1) / sph.radius(t);
    for (int k = 0; k < 3; ++k) {
        p.xi[k] = z * p.n[k];
        p.B[k] = z * speed * p.n[k];
    }
    p.theta = theta_bar(p.s / sph.r_c);
    return p;
}

struct CalibrationFields {
    double time = 0.0;
    ScalarField sdist;  // clamped
    ScalarField dist;   // unclamped |r(t) - |x - c||
    VectorField xi;
    VectorField Bfield;
    ScalarField theta;
    ScalarField ball;  // exact indicator of the ball, sampled at cell centres
};

inline CalibrationFields calibration_fields(const ClassicalSphere& sph, double t, const GridSpec& spec) {
    sph.require_in_horizon(t);
    if (sph.dim != spec.dim()) throw ConfigError("sphere dimension does not match the grid");
    CalibrationFields c;
    c.time = t;
    c.sdist = ScalarField(spec);
    c.dist = ScalarField(spec);
    c.xi = VectorField(spec);
    c.Bfield = VectorField(spec);
    c.theta = ScalarField(spec);
    c.ball = ScalarField(spec);
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const auto p = calibration_at(sph, spec, spec.position(i), t);
        c.sdist.data[i] = p.s;
        c.dist.data[i] = p.dist;
        c.xi.set(i, p.xi);
        c.Bfield.set(i, p.B);
        c.theta.data[i] = p.theta;
        c.ball.data[i] = p.inside ? 1.0 : 0.0;
    }
    return c;
}

inline ScalarField signed_distance(const ClassicalSphere& sph, double t, const GridSpec& spec) {
    return calibration_fields(sph, t, spec).sdist;
}
inline VectorField xi_field(const ClassicalSphere& sph, double t, const GridSpec& spec) {
    return calibration_fields(sph, t, spec).xi;
}
inline VectorField b_field(const ClassicalSphere& sph, double t, const GridSpec& spec) {
    return calibration_fields(sph, t, spec).Bfield;
}
inline ScalarField theta_field(const ClassicalSphere& sph, double t, const GridSpec& spec) {
    return calibration_fields(sph, t, spec).theta;
}

/// A fitted constant C = max |residual| / scale over tube cells.
struct FittedConstant {
    std::string name;
    double value = 0.0;
    double raw_max = 0.0;  // max |residual| without scaling
};

struct CalibrationReport {
    FittedConstant transport_xi;         // |d_t xi + (B.grad)xi + (grad B)^T xi| / max(dist, h)
    FittedConstant transport_length_xi;  // |xi.(d_t xi + (B.grad)xi)| / max(dist, h)^2
    FittedConstant mean_curvature;       // |B.xi + div xi| / max(dist, h)
    FittedConstant evol_weight;          // |d_t theta + B.grad theta| / max(dist, h)^2
    FittedConstant evol_weight_uncut;    // same with the velocity extension before the cutoff; raw
    double length_violation = 0.0;       // max of min{1, dist^2/r_c^2} - (1 - |xi|), <= 0 expected
    double theta_lower_violation = 0.0;  // max of min{1, dist/r_c} - |theta|
    double theta_upper_violation = 0.0;  // max of |theta| - (pi/2) min{1, dist/r_c}
    double max_xi = 0.0;
};

/// Finite-difference verification of the calibration identities at time t,
/// using centred differences in time (t +- dt) from the closed-form radius
/// and central differences in space. Cells within 2h of the sphere centre
/// are skipped (the tube never reaches them).
inline CalibrationReport verify_calibration(const ClassicalSphere& sph, double t, const GridSpec& spec, double dt) {
    sph.require_in_horizon(t - dt);
    sph.require_in_horizon(t + dt);
    const int d = spec.dim();
    const double h = spec.h();
    const auto c0 = calibration_fields(sph, t, spec);
    const auto cm = calibration_fields(sph, t - dt, spec);
    const auto cp = calibration_fields(sph, t + dt, spec);
    const auto gxi = jacobian(c0.xi);
    const auto gB = jacobian(c0.Bfield);
    const ScalarField divxi = divergence(c0.xi);
    const VectorField gth = gradient(c0.theta);
    const double speed = (d - 1) / sph.radius(t);

    CalibrationReport rep;
    rep.transport_xi.name = "transport_xi";
    rep.transport_length_xi.name = "transport_length_xi";
    rep.mean_curvature.name = "mean_curvature";
    rep.evol_weight.name = "evol_weight";
    rep.evol_weight_uncut.name = "evol_weight_uncut";
    rep.length_violation = -INFINITY;
    rep.theta_lower_violation = -INFINITY;
    rep.theta_upper_violation = -INFINITY;

    auto fit = [](FittedConstant& f, double res, double scale) {
        f.raw_max = std::max(f.raw_max, std::abs(res));
        f.value = std::max(f.value, std::abs(res) / scale);
    };

    for (std::size_t i = 0; i < spec.size(); ++i) {
        const double dist = c0.dist.data[i];
        const double rd = std::min(1.0, dist / sph.r_c);
        const auto xi = c0.xi.at(i);
        rep.max_xi = std::max(rep.max_xi, norm(xi));
        rep.length_violation = std::max(rep.length_violation, rd * rd - (1.0 - norm(xi)));
        const double th = std::abs(c0.theta.data[i]);
        rep.theta_lower_violation = std::max(rep.theta_lower_violation, rd - th);
        rep.theta_upper_violation = std::max(rep.theta_upper_violation, th - std::numbers::pi / 2.0 * rd);

        const double rc = norm(periodic_delta(spec, spec.position(i), sph.center));
        if (dist > sph.r_c || rc < 2.0 * h) continue;
        const double scale = std::max(dist, h);
        const auto B = c0.Bfield.at(i);

        std::array<double, 3> txi{0.0, 0.0, 0.0};
        double len = 0.0;
        for (int a = 0; a < d; ++a) {
            const double dtxi = (cp.xi.comp[a][i] - cm.xi.comp[a][i]) / (2.0 * dt);
            double adv = 0.0, gradT = 0.0;
            for (int b = 0; b < d; ++b) {
                adv += B[b] * gxi[a][b].data[i];
                gradT += gB[b][a].data[i] * xi[b];
            }
            txi[a] = dtxi + adv + gradT;
            len += xi[a] * (dtxi + adv);
        }
        fit(rep.transport_xi, norm(txi), scale);
        fit(rep.transport_length_xi, len, scale * scale);

        double bxi = 0.0;
        for (int a = 0; a < d; ++a) bxi += B[a] * xi[a];
        fit(rep.mean_curvature, bxi + divxi.data[i], scale);

        // theta_bar is only C^1 at +-1: a stencil reaching across |s| = r_c
        // sees the kink rather than the transport identity.
        if (dist > sph.r_c - h) continue;
        const double dtth = (cp.theta.data[i] - cm.theta.data[i]) / (2.0 * dt);
        double adv = 0.0, adv_uncut = 0.0;
        const auto n = sph.inward_normal(spec, spec.position(i));
        for (int a = 0; a < d; ++a) {
            adv += B[a] * gth.comp[a][i];
            adv_uncut += speed * n[a] * gth.comp[a][i];
        }
        fit(rep.evol_weight, dtth + adv, scale * scale);
        rep.evol_weight_uncut.raw_max = std::max(rep.evol_weight_uncut.raw_max, std::abs(dtth + adv_uncut));
        rep.evol_weight_uncut.value = rep.evol_weight_uncut.raw_max;
    }
    return rep;
}

/// Refinement stability of a fitted constant: ratio in [0.5, 2], or both
/// values below `floor` (nothing left to fit).
inline bool refinement_stable(double coarse, double fine, double floor = 1e-9) {
    if (!std::isfinite(coarse) || !std::isfinite(fine)) return false;
    if (coarse <= floor && fine <= floor) return true;
    if (coarse <= 0.0 || fine <= 0.0) return false;
    const double r = fine / coarse;
    return r >= 0.5 && r <= 2.0;
}

}  // namespace dgmc
