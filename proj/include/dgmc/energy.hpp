#pragma once

// Cahn-Hilliard energy and the discrepancy between its two terms. The gradient
// term uses the averaged forward/backward squared differences so that the
// summed energy is exactly the functional whose gradient is built from
// `laplacian`.

#include <algorithm>
#include <cmath>

#include "dgmc/double_well.hpp"
#include "dgmc/grid.hpp"

namespace dgmc {

/// (eps/2)|grad u|^2 + W(u)/eps, cellwise.
inline ScalarField energy_density(const ScalarField& u, double eps) {
    ScalarField g2 = grad_sq_symmetric(u);
    for (std::size_t i = 0; i < g2.size(); ++i) {
        g2.data[i] = 0.5 * eps * g2.data[i] + DoubleWell::W(u.data[i]) / eps;
    }
    return g2;
}

inline double energy(const ScalarField& u, double eps) { return integrate(energy_density(u, eps)); }

struct Discrepancy {
    ScalarField field;
    double L1 = 0.0;
    double max = 0.0;
};

/// (eps/2)|grad u|^2 - W(u)/eps with its L1 norm and maximum.
inline Discrepancy discrepancy(const ScalarField& u, double eps) {
    Discrepancy out;
    out.field = grad_sq_symmetric(u);
    ScalarField absval(u.spec);
    double mx = -INFINITY;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double v = 0.5 * eps * out.field.data[i] - DoubleWell::W(u.data[i]) / eps;
        out.field.data[i] = v;
        absval.data[i] = std::abs(v);
        mx = std::max(mx, v);
    }
    out.L1 = integrate(absval);
    out.max = mx;
    return out;
}

/// Chemical potential eps*Lap(u) - W'(u)/eps.
inline ScalarField chemical_potential(const ScalarField& u, double eps) {
    ScalarField lap = laplacian(u);
    for (std::size_t i = 0; i < lap.size(); ++i) {
        lap.data[i] = eps * lap.data[i] - DoubleWell::Wprime(u.data[i]) / eps;
    }
    return lap;
}

}  // namespace dgmc
