#pragma once

// Classical comparison geometries: the shrinking sphere (a circle for d = 2)
// evolving by mean curvature, and the static planar slab used in 1D.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dgmc/grid.hpp"

namespace dgmc {

/// Sphere of radius r(t) = sqrt(r0^2 - 2(d-1) t) around `center`. The inside
/// (the ball) is the phase A(t); its normal points toward the centre.
struct ClassicalSphere {
    int dim = 2;
    std::array<double, 3> center{0.5, 0.5, 0.5};
    double r0 = 0.25;
    double r_c = 0.125;
    double eps_min = 0.01;

    /// Smallest radius kept on the horizon: the layer stays resolved (6 eps)
    /// and the calibration tube |s| < r_c stays off the centre.
    double min_radius() const { return std::max(6.0 * eps_min, 1.25 * r_c); }

    double t_strong() const {
        const double rm = min_radius();
        return (r0 * r0 - rm * rm) / (2.0 * (dim - 1));
    }

    double radius(double t) const { return std::sqrt(r0 * r0 - 2.0 * (dim - 1) * t); }

    /// dr/dt = -(d-1)/r.
    double radius_rate(double t) const { return -(dim - 1) / radius(t); }

    void validate() const {
        if (dim < 2 || dim > 3) throw ConfigError("sphere geometry needs dim 2 or 3");
        if (!(r0 > 0.0)) throw ConfigError("sphere radius must be positive");
        if (!(r_c > 0.0 && r_c < 1.0)) throw ConfigError("tubular radius r_c must lie in (0,1)");
        if (!(t_strong() > 0.0)) {
            throw ConfigError("sphere horizon is empty: r0 must exceed max(6 eps, 1.25 r_c)");
        }
    }

    void require_in_horizon(double t) const {
        if (t < 0.0 || t > t_strong() * (1.0 + 1e-12)) {
            throw ConfigError("time " + std::to_string(t) + " outside the sphere horizon [0, " +
                              std::to_string(t_strong()) + "]");
        }
    }

    /// Unclamped signed distance r(t) - |x - c| (positive inside).
    double signed_distance(const GridSpec& spec, const std::array<double, 3>& x, double t) const {
        return radius(t) - norm(periodic_delta(spec, x, center));
    }

    /// Inward unit normal -(x-c)/|x-c|; e1 at the centre itself.
    std::array<double, 3> inward_normal(const GridSpec& spec, const std::array<double, 3>& x) const {
        auto d = periodic_delta(spec, x, center);
        const double r = norm(d);
        if (r == 0.0) return {1.0, 0.0, 0.0};
        return {-d[0] / r, -d[1] / r, -d[2] / r};
    }

    /// Ball volume (area for d = 2) at time t.
    double volume(double t) const {
        const double r = radius(t);
        return dim == 2 ? std::numbers::pi * r * r : 4.0 / 3.0 * std::numbers::pi * r * r * r;
    }

    double perimeter(double t) const {
        const double r = radius(t);
        return dim == 2 ? 2.0 * std::numbers::pi * r : 4.0 * std::numbers::pi * r * r;
    }
};

/// Static slab {|x - center| < half_width} in 1D (two planar interfaces).
struct PlanarSlab {
    double center = 0.5;
    double half_width = 0.25;

    double signed_distance(const GridSpec& spec, const std::array<double, 3>& x) const {
        auto d = periodic_delta(spec, x, {center, 0.0, 0.0});
        return half_width - std::abs(d[0]);
    }

    int interface_count() const { return 2; }
};

}  // namespace dgmc
