#pragma once

#include <algorithm>
#include <cmath>

namespace dgmc {

/// Standard quartic double well W(u) = u^2 (u-1)^2 / 4 with wells at 0 and 1.
struct DoubleWell {
    struct Values {
        double W;
        double Wprime;
        double sqrt2W;
        double phi;
    };

    static double W(double u) {
        const double a = u * (u - 1.0);
        return 0.25 * a * a;
    }
    static double Wprime(double u) { return 0.5 * u * (u - 1.0) * (2.0 * u - 1.0); }
    static double Wsecond(double u) { return 0.5 * (6.0 * u * u - 6.0 * u + 1.0); }
    static double sqrt2W(double u) { return std::abs(u) * std::abs(u - 1.0) / std::sqrt(2.0); }

    /// phi(u) = int_0^u sqrt(2 W(s)) ds, nondecreasing on the whole real line.
    static double phi(double u) {
        const double r = 1.0 / std::sqrt(2.0);
        const double core = u * u / 2.0 - u * u * u / 3.0;  // int_0^u s(1-s) ds
        if (u < 0.0) return -r * core;
        if (u <= 1.0) return r * core;
        return sigma() + r * (u * u * u / 3.0 - u * u / 2.0 + 1.0 / 6.0);
    }

    /// Surface tension phi(1) = 1/(6 sqrt 2).
    static constexpr double sigma() { return 0.11785113019775792; }

    static Values eval(double u) { return {W(u), Wprime(u), sqrt2W(u), phi(u)}; }

    /// max |W''| over [lo, hi]; W'' is a parabola so the extremes sit at the
    /// endpoints or at the vertex u = 1/2.
    static double max_abs_Wsecond(double lo, double hi) {
        double m = std::max(std::abs(Wsecond(lo)), std::abs(Wsecond(hi)));
        if (lo <= 0.5 && 0.5 <= hi) m = std::max(m, std::abs(Wsecond(0.5)));
        return m;
    }
};

/// Range on which the explicit reaction stiffness is bounded.
inline constexpr double kReactionRangeLo = -0.1;
inline constexpr double kReactionRangeHi = 1.1;

/// Heteroclinic profile q(s) = (1 + tanh(s / (2 sqrt 2))) / 2, q' = sqrt(2W(q)).
inline double optimal_profile(double s) { return 0.5 * (1.0 + std::tanh(s / (2.0 * std::sqrt(2.0)))); }

inline double optimal_profile_derivative(double s) {
    const double c = std::cosh(s / (2.0 * std::sqrt(2.0)));
    return 1.0 / (4.0 * std::sqrt(2.0) * c * c);
}

/// Distance (in units of eps) beyond which q is within 1e-7 of a well.
inline double profile_saturation_distance() {
    // 1 - q(s) = 1/(1 + exp(s/sqrt2)) <= 1e-7
    return std::sqrt(2.0) * std::log(1e7);
}

}  // namespace dgmc
