#pragma once

// Allen-Cahn gradient flow du/dt = Lap u - W'(u)/eps^2 on a periodic grid:
// well-prepared initial data, explicit and semi-implicit time stepping, and
// the balanced energy-dissipation rate.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "dgmc/double_well.hpp"
#include "dgmc/energy.hpp"
#include "dgmc/grid.hpp"
#include "dgmc/sphere.hpp"

namespace dgmc {

/// Raised when the iterate leaves any sane range; carries the step index.
class BlowUpError : public std::runtime_error {
public:
    BlowUpError(long step, double value)
        : std::runtime_error("numerical blow-up at step " + std::to_string(step) +
                             " (max|u| = " + std::to_string(value) + ")"),
          step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

struct DiffuseState {
    ScalarField u;
    double eps = 0.01;
    double time = 0.0;

    void validate() const {
        if (!(eps >= 2.0 * u.spec.h() * (1.0 - 1e-12))) {
            throw ConfigError("eps = " + std::to_string(eps) + " under-resolves the layer (need eps >= 2h = " +
                              std::to_string(2.0 * u.spec.h()) + ")");
        }
        if (!all_finite(u)) throw ConfigError("order parameter contains non-finite values");
    }
};

/// Constant in the discrete discrepancy bound tol_disc = C_q h^2 / eps^3.
/// The sampled optimal profile gives 4.08e-4 independently of eps/h, for any
/// orientation of a circle against the grid; rounded up.
inline constexpr double kDiscrepancyConstant = 5e-4;

inline double discrepancy_tolerance(double h, double eps) {
    return kDiscrepancyConstant * h * h / (eps * eps * eps);
}

/// Stiffness bound 1/max|W''| over the reaction range.
inline double reaction_time_constant() {
    return 1.0 / DoubleWell::max_abs_Wsecond(kReactionRangeLo, kReactionRangeHi);
}

struct StepScheme {
    enum class Kind { Explicit, SemiImplicit };
    Kind kind = Kind::SemiImplicit;
    double dt = 0.0;

    static double max_stable_dt(Kind kind, const GridSpec& spec, double eps) {
        double dt = eps * eps * reaction_time_constant();
        if (kind == Kind::Explicit) {
            dt = std::min(dt, 0.9 * spec.h() * spec.h() / (2.0 * spec.dim()));
        }
        return dt;
    }

    /// An eighth of the reaction limit. The explicit reaction shifts the
    /// front speed by a relative amount proportional to dt/eps^2; at this
    /// factor the shift stays under half a percent.
    static constexpr double kAutoDtFactor = 0.125;

    static double auto_dt(const GridSpec& spec, double eps, Kind kind = Kind::SemiImplicit) {
        double dt = kAutoDtFactor * eps * eps * reaction_time_constant();
        if (kind == Kind::Explicit) dt = std::min(dt, max_stable_dt(kind, spec, eps));
        return dt;
    }

    void validate(const GridSpec& spec, double eps) const {
        const double limit = max_stable_dt(kind, spec, eps);
        if (!(dt > 0.0) || dt > limit * (1.0 + 1e-12)) {
            throw ConfigError("time step " + std::to_string(dt) + " violates the stability limit " +
                              std::to_string(limit) +
                              (kind == Kind::Explicit ? " (explicit)" : " (semi-implicit)"));
        }
    }
};

inline const char* to_string(StepScheme::Kind k) {
    return k == StepScheme::Kind::Explicit ? "explicit" : "semi-implicit";
}

/// Direct solver for (I - dt Lap_h) x = b with the periodic (2d+1)-point
/// Laplacian, diagonalised by the real FFT.
class HelmholtzSolver {
public:
    HelmholtzSolver(const GridSpec& spec, double dt) : spec_(spec), dt_(dt) {
        const int d = spec.dim();
        const int n = spec.n();
        const std::size_t N = spec.size();
        const std::size_t half = static_cast<std::size_t>(n / 2 + 1);
        complex_size_ = N / static_cast<std::size_t>(n) * half;
        real_.reset(fftw_alloc_real(N));
        spec_buf_.reset(fftw_alloc_complex(complex_size_));
        // FFTW is row-major with the last dimension fastest; our axis 0 is fastest.
        std::vector<int> dims(static_cast<std::size_t>(d), n);
        forward_ = fftw_plan_dft_r2c(d, dims.data(), real_.get(), spec_buf_.get(), FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_c2r(d, dims.data(), spec_buf_.get(), real_.get(), FFTW_ESTIMATE);
        if (!forward_ || !backward_) throw std::runtime_error("FFTW plan creation failed");

        std::vector<double> axis_eig(static_cast<std::size_t>(n));
        const double invh2 = 1.0 / (spec.h() * spec.h());
        for (int m = 0; m < n; ++m) {
            const double s = std::sin(std::numbers::pi * m / n);
            axis_eig[static_cast<std::size_t>(m)] = -4.0 * invh2 * s * s;
        }
        factor_.resize(complex_size_);
        const double scale = 1.0 / static_cast<double>(N);
        for (std::size_t idx = 0; idx < complex_size_; ++idx) {
            // idx = m0 + half * (m1 + n * m2), m0 in [0, n/2]
            std::size_t rest = idx;
            const std::size_t m0 = rest % half;
            rest /= half;
            double lam = axis_eig[m0];
            for (int k = 1; k < d; ++k) {
                lam += axis_eig[rest % static_cast<std::size_t>(n)];
                rest /= static_cast<std::size_t>(n);
            }
            factor_[idx] = scale / (1.0 - dt * lam);
        }
    }

    HelmholtzSolver(const HelmholtzSolver&) = delete;
    HelmholtzSolver& operator=(const HelmholtzSolver&) = delete;

    ~HelmholtzSolver() {
        if (forward_) fftw_destroy_plan(forward_);
        if (backward_) fftw_destroy_plan(backward_);
    }

    ScalarField solve(const ScalarField& b) const {
        require_same_grid(spec_, b.spec, "HelmholtzSolver::solve");
        std::copy(b.data.begin(), b.data.end(), real_.get());
        fftw_execute(forward_);
        for (std::size_t i = 0; i < complex_size_; ++i) {
            spec_buf_.get()[i][0] *= factor_[i];
            spec_buf_.get()[i][1] *= factor_[i];
        }
        fftw_execute(backward_);
        ScalarField x(spec_);
        std::copy(real_.get(), real_.get() + spec_.size(), x.data.begin());
        return x;
    }

    /// ||(I - dt Lap) x - b||_2 / ||b||_2.
    double relative_residual(const ScalarField& x, const ScalarField& b) const {
        ScalarField lap = laplacian(x);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = x.data[i] - dt_ * lap.data[i] - b.data[i];
            num += r * r;
            den += b.data[i] * b.data[i];
        }
        return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    }

    double dt() const { return dt_; }

private:
    struct RealFree {
        void operator()(double* p) const { fftw_free(p); }
    };
    struct ComplexFree {
        void operator()(fftw_complex* p) const { fftw_free(p); }
    };

    GridSpec spec_;
    double dt_;
    std::size_t complex_size_ = 0;
    std::unique_ptr<double, RealFree> real_;
    std::unique_ptr<fftw_complex, ComplexFree> spec_buf_;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
    std::vector<double> factor_;
};

/// Divergence detector threshold on max|u|.
inline constexpr double kBlowUpThreshold = 10.0;

/// Time stepper bound to one grid, eps and scheme; keeps the FFT plan alive
/// between steps.
class AllenCahnStepper {
public:
    AllenCahnStepper(const GridSpec& spec, double eps, StepScheme scheme) : spec_(spec), eps_(eps), scheme_(scheme) {
        scheme_.validate(spec, eps);
        if (scheme_.kind == StepScheme::Kind::SemiImplicit) {
            solver_ = std::make_unique<HelmholtzSolver>(spec, scheme_.dt);
        }
    }

    const StepScheme& scheme() const { return scheme_; }

    DiffuseState step(const DiffuseState& s, long step_index = 0) const {
        require_same_grid(spec_, s.u.spec, "AllenCahnStepper::step");
        if (s.eps != eps_) throw ConfigError("stepper eps does not match state eps");
        const double dt = scheme_.dt;
        const double k = dt / (eps_ * eps_);
        DiffuseState next{ScalarField(spec_), eps_, s.time + dt};
        if (scheme_.kind == StepScheme::Kind::Explicit) {
            ScalarField lap = laplacian(s.u);
            for (std::size_t i = 0; i < s.u.size(); ++i) {
                next.u.data[i] = s.u.data[i] + dt * lap.data[i] - k * DoubleWell::Wprime(s.u.data[i]);
            }
        } else {
            ScalarField rhs(spec_);
            for (std::size_t i = 0; i < s.u.size(); ++i) {
                rhs.data[i] = s.u.data[i] - k * DoubleWell::Wprime(s.u.data[i]);
            }
            next.u = solver_->solve(rhs);
        }
        double mx = 0.0;
        for (double v : next.u.data) {
            if (!std::isfinite(v)) throw BlowUpError(step_index, v);
            mx = std::max(mx, std::abs(v));
        }
        if (mx > kBlowUpThreshold) throw BlowUpError(step_index, mx);
        return next;
    }

    const HelmholtzSolver* solver() const { return solver_.get(); }

private:
    GridSpec spec_;
    double eps_;
    StepScheme scheme_;
    std::unique_ptr<HelmholtzSolver> solver_;
};

/// One step without keeping the solver around.
inline DiffuseState step(const DiffuseState& s, const StepScheme& scheme, long step_index = 0) {
    return AllenCahnStepper(s.u.spec, s.eps, scheme).step(s, step_index);
}

/// q(s/eps) from a signed distance (positive inside), saturated exactly to
/// the wells once |s| exceeds the profile saturation distance.
template <class SignedDistance>
ScalarField profile_from_distance(const GridSpec& spec, double eps, SignedDistance&& sdist) {
    const double sat = profile_saturation_distance();
    return sample(spec, [&](const std::array<double, 3>& x) {
        const double z = sdist(x) / eps;
        if (z >= sat) return 1.0;
        if (z <= -sat) return 0.0;
        return optimal_profile(z);
    });
}

using InitialGeometry = std::variant<ClassicalSphere, PlanarSlab>;

/// Minimum distance from an interface to the periodic seam (half the gap to
/// the nearest periodic image or sibling interface).
inline double seam_clearance(const InitialGeometry& g, const GridSpec& spec) {
    const double L = spec.extent();
    if (const auto* sph = std::get_if<ClassicalSphere>(&g)) return 0.5 * L - sph->r0;
    const auto& slab = std::get<PlanarSlab>(g);
    return std::min(slab.half_width, 0.5 * L - slab.half_width);
}

/// Optimal-profile initial data for a sphere (d = 2, 3) or a slab (d = 1).
inline DiffuseState well_prepared_init(const InitialGeometry& geometry, double eps, const GridSpec& spec) {
    if (const auto* sph = std::get_if<ClassicalSphere>(&geometry)) {
        if (sph->dim != spec.dim()) throw ConfigError("sphere dimension does not match the grid");
    } else if (spec.dim() != 1) {
        throw ConfigError("planar slab initial data is one-dimensional");
    }
    if (seam_clearance(geometry, spec) < 8.0 * eps) {
        throw ConfigError("interface lies within 8 eps of the periodic seam");
    }
    DiffuseState s;
    s.eps = eps;
    s.time = 0.0;
    if (const auto* sph = std::get_if<ClassicalSphere>(&geometry)) {
        s.u = profile_from_distance(spec, eps, [&](const auto& x) { return sph->signed_distance(spec, x, 0.0); });
    } else {
        const auto& slab = std::get<PlanarSlab>(geometry);
        s.u = profile_from_distance(spec, eps, [&](const auto& x) { return slab.signed_distance(spec, x); });
    }
    s.validate();
    return s;
}

struct DissipationRate {
    double rate_lhs = 0.0;  // (E(next) - E(cur)) / dt
    double rate_rhs = 0.0;  // balanced right side at the midpoint
};

/// Midpoint state (u + u_next) / 2.
inline ScalarField midpoint(const ScalarField& a, const ScalarField& b) {
    ScalarField m(a.spec);
    for (std::size_t i = 0; i < a.size(); ++i) m.data[i] = 0.5 * (a.data[i] + b.data[i]);
    return m;
}

/// The two balanced dissipation integrands integrated over space:
/// 1/2 int eps (du/dt)^2 and 1/2 int (1/eps)(eps Lap u - W'(u)/eps)^2.
struct DissipationTerms {
    double velocity = 0.0;
    double curvature = 0.0;
};

inline DissipationTerms dissipation_terms(const DiffuseState& cur, const DiffuseState& next, double dt) {
    const double eps = cur.eps;
    ScalarField um = midpoint(cur.u, next.u);
    ScalarField mu = chemical_potential(um, eps);
    ScalarField a(cur.u.spec), b(cur.u.spec);
    for (std::size_t i = 0; i < um.size(); ++i) {
        const double ut = (next.u.data[i] - cur.u.data[i]) / dt;
        a.data[i] = 0.5 * eps * ut * ut;
        b.data[i] = 0.5 * mu.data[i] * mu.data[i] / eps;
    }
    return {integrate(a), integrate(b)};
}

inline DissipationRate dissipation_rate(const DiffuseState& cur, const DiffuseState& next, double dt) {
    DissipationRate r;
    r.rate_lhs = (energy(next.u, next.eps) - energy(cur.u, cur.eps)) / dt;
    const auto t = dissipation_terms(cur, next, dt);
    r.rate_rhs = -(t.velocity + t.curvature);
    return r;
}

}  // namespace dgmc
