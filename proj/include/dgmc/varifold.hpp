#pragma once

// Discrete oriented varifold of a diffuse state: mass weight |grad psi|,
// Dirac normal, approximate normal speed and mean curvature, the phase
// indicator read off at u = 1/2, and the coarse-grained multiplicity.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dgmc/allen_cahn.hpp"
#include "dgmc/double_well.hpp"
#include "dgmc/energy.hpp"
#include "dgmc/grid.hpp"

namespace dgmc {

inline constexpr double kWeightFloorRel = 1e-14;
inline constexpr double kSpeedFloor = 1e-12;
inline constexpr double kPhaseThreshold = 0.5;

/// psi = phi(u), the Modica-Mortola primitive.
inline ScalarField psi_field(const ScalarField& u) { return map(u, [](double v) { return DoubleWell::phi(v); }); }
inline ScalarField psi_field(const DiffuseState& s) { return psi_field(s.u); }

struct DiscreteVarifold {
    GridSpec spec;
    double time = 0.0;
    ScalarField weight;
    VectorField normal;
    std::optional<ScalarField> vel;
    std::optional<VectorField> curv;
    std::optional<ScalarField> depth;  // signed distance to {u = 1/2} read off the profile
    double sigma = DoubleWell::sigma();

    double mass() const { return integrate(weight); }
};

namespace detail {

/// Unit normals of a gradient field; e1 where |g| <= floor.
inline VectorField unit_normals(const VectorField& g, const ScalarField& mag, double floor) {
    VectorField n(g.spec, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (mag.data[i] > floor) {
            for (int k = 0; k < g.spec.dim(); ++k) n.comp[k][i] = g.comp[k][i] / mag.data[i];
        } else {
            n.comp[0][i] = 1.0;
        }
    }
    return n;
}

inline double weight_floor(const ScalarField& w) { return kWeightFloorRel * max_abs(w); }

}  // namespace detail

inline DiscreteVarifold build_varifold(const ScalarField& u, double time = 0.0) {
    DiscreteVarifold v;
    v.spec = u.spec;
    v.time = time;
    VectorField g = gradient(psi_field(u));
    v.weight = magnitude(g);
    v.normal = detail::unit_normals(g, v.weight, detail::weight_floor(v.weight));
    return v;
}

/// Largest |depth| in units of eps; beyond it the weight is negligible.
inline constexpr double kDepthClamp = 8.0;

/// s = eps q^{-1}(u), clamped to +-kDepthClamp eps: the distance to the
/// level set {u = 1/2} if u were the optimal profile.
inline ScalarField profile_depth(const ScalarField& u, double eps) {
    return map(u, [eps](double v) {
        const double a = std::clamp(2.0 * v - 1.0, -1.0 + 1e-15, 1.0 - 1e-15);
        return std::clamp(2.0 * std::numbers::sqrt2 * std::atanh(a), -kDepthClamp, kDepthClamp) * eps;
    });
}

inline DiscreteVarifold build_varifold(const DiffuseState& s) {
    DiscreteVarifold v = build_varifold(s.u, s.time);
    v.depth = profile_depth(s.u, s.eps);
    return v;
}

/// V = -eps du/dt / sqrt(2W(u)) at the half step, zero where sqrt(2W) is
/// below the floor. V > 0 where the phase {u > 1/2} shrinks.
inline ScalarField normal_speed(const DiffuseState& cur, const DiffuseState& next, double dt) {
    require_same_grid(cur.u.spec, next.u.spec, "normal_speed");
    ScalarField V(cur.u.spec, 0.0);
    const double eps = cur.eps;
    for (std::size_t i = 0; i < V.size(); ++i) {
        const double um = 0.5 * (cur.u.data[i] + next.u.data[i]);
        const double g = DoubleWell::sqrt2W(um);
        if (g < kSpeedFloor) continue;
        V.data[i] = -eps * (next.u.data[i] - cur.u.data[i]) / dt / g;
    }
    return V;
}

/// H_eps = -(eps Lap u - W'(u)/eps) * normal, carrying the raw profile
/// magnitude; the dissipation uses |H_eps|^2 / eps.
inline VectorField mean_curvature_vec(const DiffuseState& s) {
    const DiscreteVarifold v = build_varifold(s);
    const ScalarField mu = chemical_potential(s.u, s.eps);
    VectorField H(s.u.spec, 0.0);
    for (std::size_t i = 0; i < H.size(); ++i) {
        for (int k = 0; k < s.u.spec.dim(); ++k) H.comp[k][i] = -mu.data[i] * v.normal.comp[k][i];
    }
    return H;
}

/// Scalar curvature -(eps Lap u - W'/eps) / (eps |grad u|), zero where
/// eps|grad u| is below 1e-8 of its maximum. Positive on a shrinking sphere,
/// where it tends to (d-1)/r; multiplied by the normal it is the varifold
/// curvature vector.
inline ScalarField scalar_curvature_estimate(const DiffuseState& s) {
    const ScalarField mu = chemical_potential(s.u, s.eps);
    ScalarField den = magnitude(gradient(s.u));
    for (double& d : den.data) d *= s.eps;
    const double floor = 1e-8 * max_abs(den);
    ScalarField H(s.u.spec, 0.0);
    for (std::size_t i = 0; i < H.size(); ++i) {
        if (den.data[i] > floor) H.data[i] = -mu.data[i] / den.data[i];
    }
    return H;
}

/// Attaches the varifold curvature H_est * normal.
inline void attach_curvature(DiscreteVarifold& v, const DiffuseState& s) {
    const ScalarField H = scalar_curvature_estimate(s);
    VectorField c(v.spec, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
        for (int k = 0; k < v.spec.dim(); ++k) c.comp[k][i] = H.data[i] * v.normal.comp[k][i];
    }
    v.curv = std::move(c);
}

/// Weighted average of f over cells with weight > frac * max weight.
inline double interface_average(const ScalarField& f, const ScalarField& weight, double frac = 0.1) {
    const double cut = frac * max_abs(weight);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (weight.data[i] > cut) {
            num += f.data[i] * weight.data[i];
            den += weight.data[i];
        }
    }
    return den > 0.0 ? num / den : 0.0;
}

struct FirstVariation {
    double lhs = 0.0;  // int H . B d omega
    double rhs = 0.0;  // -int (I - p (x) p) : grad B d mu
    double residual = 0.0;
};

/// Weak curvature identity against a test field B. The denominator is
/// |H||B| + |(I - p(x)p):grad B| integrated plus mass * max|grad B|, so a
/// constant field is measured against the curvature scale, not against zero.
inline FirstVariation first_variation(const DiscreteVarifold& v, const VectorField& B) {
    if (!v.curv) throw std::invalid_argument("first_variation needs a varifold with curvature");
    require_same_grid(v.spec, B.spec, "first_variation");
    const int d = v.spec.dim();
    const auto jac = jacobian(B);
    const double hd = v.spec.cell_volume();
    std::vector<double> lhs(v.spec.size()), rhs(v.spec.size()), alhs(v.spec.size()), arhs(v.spec.size());
    double gradmax = 0.0;
    for (std::size_t i = 0; i < v.spec.size(); ++i) {
        const double w = v.weight.data[i];
        double hb = 0.0, hn = 0.0, bn = 0.0, tr = 0.0;
        for (int a = 0; a < d; ++a) {
            hb += v.curv->comp[a][i] * B.comp[a][i];
            hn += v.curv->comp[a][i] * v.curv->comp[a][i];
            bn += B.comp[a][i] * B.comp[a][i];
            for (int b = 0; b < d; ++b) {
                const double g = jac[a][b].data[i];
                gradmax = std::max(gradmax, std::abs(g));
                const double proj = (a == b ? 1.0 : 0.0) - v.normal.comp[a][i] * v.normal.comp[b][i];
                tr += proj * g;
            }
        }
        lhs[i] = hb * w;
        rhs[i] = -tr * w;
        alhs[i] = std::sqrt(hn * bn) * w;
        arhs[i] = std::abs(tr) * w;
    }
    FirstVariation fv;
    fv.lhs = pairwise_sum(lhs) * hd;
    fv.rhs = pairwise_sum(rhs) * hd;
    const double den = (pairwise_sum(alhs) + pairwise_sum(arhs)) * hd + v.mass() * gradmax;
    fv.residual = den > 0.0 ? std::abs(fv.lhs - fv.rhs) / den : 0.0;
    return fv;
}

inline double first_variation_residual(const DiscreteVarifold& v, const VectorField& B) {
    return first_variation(v, B).residual;
}

/// chi = 1 on {u > 1/2}.
struct PhaseIndicator {
    ScalarField chi;

    double volume() const { return integrate(chi); }

    /// chi smoothed by the separable binomial kernel (1,4,6,4,1)/16 along
    /// every axis, i.e. a mollifier of half-width 2h.
    ScalarField smoothed() const {
        const GridSpec& spec = chi.spec;
        ScalarField cur = chi;
        const std::size_t n = static_cast<std::size_t>(spec.n());
        for (int k = 0; k < spec.dim(); ++k) {
            ScalarField out(spec, 0.0);
            const std::size_t inner = spec.stride(k);
            const std::size_t outer = spec.size() / (inner * n);
            for (std::size_t o = 0; o < outer; ++o) {
                const std::size_t base = o * n * inner;
                for (std::size_t c = 0; c < n; ++c) {
                    const std::size_t r0 = base + c * inner;
                    const std::size_t rp1 = base + ((c + 1) % n) * inner;
                    const std::size_t rp2 = base + ((c + 2) % n) * inner;
                    const std::size_t rm1 = base + ((c + n - 1) % n) * inner;
                    const std::size_t rm2 = base + ((c + n - 2) % n) * inner;
                    for (std::size_t i = 0; i < inner; ++i) {
                        out.data[r0 + i] = (cur.data[rm2 + i] + 4.0 * cur.data[rm1 + i] + 6.0 * cur.data[r0 + i] +
                                            4.0 * cur.data[rp1 + i] + cur.data[rp2 + i]) /
                                           16.0;
                    }
                }
            }
            cur = std::move(out);
        }
        return cur;
    }

    /// Gradient of the smoothed indicator; |.| is the perimeter density and
    /// the direction is the inward normal of {chi = 1}.
    VectorField smoothed_gradient() const { return gradient(smoothed()); }

    ScalarField perimeter_density() const { return magnitude(smoothed_gradient()); }

    double perimeter() const { return integrate(perimeter_density()); }
};

inline PhaseIndicator phase_indicator(const ScalarField& u) {
    return {map(u, [](double v) { return v > kPhaseThreshold ? 1.0 : 0.0; })};
}

/// Packed copy of a phase indicator, used to keep many time slices around.
struct PhaseBits {
    std::vector<std::uint64_t> words;

    static PhaseBits from(const PhaseIndicator& p) {
        PhaseBits b;
        b.words.assign((p.chi.size() + 63) / 64, 0);
        for (std::size_t i = 0; i < p.chi.size(); ++i) {
            if (p.chi.data[i] > 0.5) b.words[i / 64] |= std::uint64_t{1} << (i % 64);
        }
        return b;
    }

    /// Number of cells where the two indicators differ.
    std::size_t symmetric_difference(const PhaseBits& o) const {
        if (o.words.size() != words.size()) throw std::invalid_argument("phase slices of different size");
        std::size_t c = 0;
        for (std::size_t i = 0; i < words.size(); ++i) c += static_cast<std::size_t>(__builtin_popcountll(words[i] ^ o.words[i]));
        return c;
    }
};

/// Coarse-grained density rho = sigma |grad chi| / omega on boxes of
/// `box_cells` cells per side. Boxes are smooth windows (a cos^2 partition
/// of unity centred on the boxes) so an interface running along a box edge
/// is shared the same way by both measures. When the varifold carries a
/// depth, each cell's weight is booked at its foot point x - depth * normal.
struct MultiplicityField {
    int boxes_per_axis = 0;
    std::vector<double> rho;    // raw, unclamped; NaN for empty boxes
    std::vector<double> mass;   // omega-mass per box
    std::vector<bool> empty;

    /// int (1 - rho) d omega with rho clamped to [0, 1], empty boxes skipped.
    double defect() const {
        double s = 0.0;
        for (std::size_t b = 0; b < rho.size(); ++b) {
            if (empty[b]) continue;
            s += (1.0 - std::clamp(rho[b], 0.0, 1.0)) * mass[b];
        }
        return s;
    }

    std::size_t occupied() const { return static_cast<std::size_t>(std::count(empty.begin(), empty.end(), false)); }
};

/// Default mass floor 0.25 sigma * (box side)^(d-1): a quarter of a flat
/// unit-density interface crossing the box.
inline double default_mass_floor(const GridSpec& spec, int box_cells) {
    return 0.25 * DoubleWell::sigma() * std::pow(box_cells * spec.h(), spec.dim() - 1);
}

inline MultiplicityField multiplicity_field(const DiscreteVarifold& v, const PhaseIndicator& chi, int box_cells,
                                            double eps, std::optional<double> mass_floor = std::nullopt) {
    const GridSpec& spec = v.spec;
    require_same_grid(spec, chi.chi.spec, "multiplicity_field");
    if (box_cells <= 0 || spec.n() % box_cells != 0) {
        throw ConfigError("multiplicity box must divide the grid");
    }
    if (box_cells * spec.h() < 8.0 * eps * (1.0 - 1e-12)) throw ConfigError("multiplicity box must be at least 8 eps");
    const double floor = mass_floor.value_or(default_mass_floor(spec, box_cells));
    const int nb = spec.n() / box_cells;
    std::size_t nbox = 1;
    for (int k = 0; k < spec.dim(); ++k) nbox *= static_cast<std::size_t>(nb);
    std::vector<double> per(nbox, 0.0), mass(nbox, 0.0);
    const ScalarField pd = chi.perimeter_density();
    const double hd = spec.cell_volume();
    const double side = box_cells * spec.h();
    // Per axis, a point between box centres c_j and c_{j+1} is shared with
    // weights cos^2 and sin^2 of pi/2 times its offset in box sides.
    struct Share {
        std::array<std::array<int, 2>, 3> j{};
        std::array<std::array<double, 2>, 3> w{};
    };
    auto share_of = [&](const std::array<double, 3>& x) {
        Share sh;
        for (int k = 0; k < spec.dim(); ++k) {
            const double y = x[k] / side - 0.5;
            const double fl = std::floor(y);
            const double f = y - fl;
            const int j0 = static_cast<int>(fl);
            sh.j[k] = {((j0 % nb) + nb) % nb, ((j0 + 1) % nb + nb) % nb};
            const double c = std::cos(0.5 * std::numbers::pi * f);
            sh.w[k] = {c * c, 1.0 - c * c};
        }
        return sh;
    };
    auto deposit = [&](std::vector<double>& acc, const std::array<double, 3>& x, double value) {
        const Share sh = share_of(x);
        const int corners = 1 << spec.dim();
        for (int m = 0; m < corners; ++m) {
            std::size_t b = 0, mul = 1;
            double w = 1.0;
            for (int k = 0; k < spec.dim(); ++k) {
                const int bit = (m >> k) & 1;
                b += static_cast<std::size_t>(sh.j[k][bit]) * mul;
                w *= sh.w[k][bit];
                mul *= static_cast<std::size_t>(nb);
            }
            acc[b] += w * value;
        }
    };
    for (std::size_t i = 0; i < spec.size(); ++i) {
        auto x = spec.position(i);
        if (pd.data[i] != 0.0) deposit(per, x, pd.data[i] * hd);
        if (v.weight.data[i] == 0.0) continue;
        if (v.depth) {
            const double s = v.depth->data[i];
            for (int k = 0; k < spec.dim(); ++k) x[k] -= s * v.normal.comp[k][i];
        }
        deposit(mass, x, v.weight.data[i] * hd);
    }
    MultiplicityField m;
    m.boxes_per_axis = nb;
    m.rho.assign(nbox, std::numeric_limits<double>::quiet_NaN());
    m.empty.assign(nbox, true);
    m.mass = mass;
    for (std::size_t b = 0; b < nbox; ++b) {
        if (mass[b] < floor) continue;
        m.empty[b] = false;
        m.rho[b] = v.sigma * per[b] / mass[b];
    }
    return m;
}

/// Separable space-time test function zeta(x, t) = space(x) * time(t).
/// The spatial factor is sampled once per run; each step then costs a few
/// weighted sums instead of a fresh sample of the whole grid.
struct SpaceTimeFunction {
    std::function<double(const std::array<double, 3>&)> space;
    std::function<double(double)> time = [](double) { return 1.0; };

    double operator()(const std::array<double, 3>& x, double t) const { return space(x) * time(t); }
};

/// Terms of the transport identity
///   [sigma int chi zeta]_0^T - sigma int int chi d_t zeta + int int V zeta d omega dt = 0
/// (or with sigma chi replaced by psi for the diffuse variant).
struct TransportTerms {
    double end_term = 0.0;    // sigma int chi(T) zeta(T)
    double start_term = 0.0;  // sigma int chi(0) zeta(0)
    double time_term = 0.0;   // sigma int int chi d_t zeta
    double speed_term = 0.0;  // int int V zeta d omega dt
    double max_abs_term = 0.0;

    double defect() const { return end_term - start_term - time_term + speed_term; }

    /// |defect| over the sum of the moving parts |end - start|, |time|,
    /// |speed|. The denominator is floored at 1e-3 of the largest term so a
    /// configuration at rest measures its drift against the static content.
    double residual() const {
        const double moving = std::abs(end_term - start_term) + std::abs(time_term) + std::abs(speed_term);
        const double den = std::max(moving, 1e-3 * max_abs_term);
        return den > 0.0 ? std::abs(defect()) / den : 0.0;
    }
};

/// Accumulates the transport identity along a run for a family of test
/// functions. Each step uses the exact discrete product rule
///   a1 b1 - a0 b0 = (a0 + a1)/2 (b1 - b0) + (b0 + b1)/2 (a1 - a0),
/// so the only defect is the one between d(sigma chi) and -V omega.
class TransportAccumulator {
public:
    TransportAccumulator(std::vector<SpaceTimeFunction> tests, double sigma = DoubleWell::sigma())
        : tests_(std::move(tests)), sigma_(sigma) {}

    void start(const DiffuseState& s) {
        spec_ = s.u.spec;
        g_.clear();
        for (const auto& f : tests_) g_.push_back(sample(spec_, f.space));
        const ScalarField chi = phase_indicator(s.u).chi;
        const ScalarField psi = psi_field(s.u);
        a_prev_.assign(tests_.size(), 0.0);
        chi_prev_.assign(tests_.size(), 0.0);
        psi_prev_.assign(tests_.size(), 0.0);
        sharp_.assign(tests_.size(), {});
        diffuse_.assign(tests_.size(), {});
        for (std::size_t j = 0; j < tests_.size(); ++j) {
            a_prev_[j] = tests_[j].time(s.time);
            chi_prev_[j] = weighted_integral(chi, g_[j]);
            psi_prev_[j] = weighted_integral(psi, g_[j]);
            sharp_[j].start_term = sigma_ * a_prev_[j] * chi_prev_[j];
            diffuse_[j].start_term = a_prev_[j] * psi_prev_[j];
            sharp_[j].end_term = sharp_[j].start_term;
            diffuse_[j].end_term = diffuse_[j].start_term;
        }
        started_ = true;
        steps_ = 0;
    }

    /// V and weight are the half-step speed and mass density.
    void add_step(const DiffuseState& next, const ScalarField& V, const ScalarField& weight, double dt) {
        if (!started_) throw std::logic_error("TransportAccumulator::start not called");
        const ScalarField chi = phase_indicator(next.u).chi;
        const ScalarField psi = psi_field(next.u);
        ScalarField vw(spec_);
        for (std::size_t i = 0; i < spec_.size(); ++i) vw.data[i] = V.data[i] * weight.data[i];
        for (std::size_t j = 0; j < tests_.size(); ++j) {
            const double a = tests_[j].time(next.time);
            const double sc = weighted_integral(chi, g_[j]);
            const double sp = weighted_integral(psi, g_[j]);
            const double da = a - a_prev_[j], abar = 0.5 * (a + a_prev_[j]);
            const double speed = abar * weighted_integral(vw, g_[j]) * dt;
            sharp_[j].time_term += sigma_ * 0.5 * (sc + chi_prev_[j]) * da;
            diffuse_[j].time_term += 0.5 * (sp + psi_prev_[j]) * da;
            sharp_[j].speed_term += speed;
            diffuse_[j].speed_term += speed;
            sharp_[j].end_term = sigma_ * a * sc;
            diffuse_[j].end_term = a * sp;
            for (auto* t : {&sharp_[j], &diffuse_[j]}) {
                t->max_abs_term = std::max({t->max_abs_term, std::abs(t->end_term), std::abs(t->start_term),
                                            std::abs(t->time_term), std::abs(t->speed_term)});
            }
            a_prev_[j] = a;
            chi_prev_[j] = sc;
            psi_prev_[j] = sp;
        }
        ++steps_;
    }

    std::size_t size() const { return tests_.size(); }
    long steps() const { return steps_; }
    const TransportTerms& sharp(std::size_t j) const { return sharp_.at(j); }
    const TransportTerms& diffuse(std::size_t j) const { return diffuse_.at(j); }

    /// Accumulated state for checkpointing.
    struct Snapshot {
        std::vector<TransportTerms> sharp, diffuse;
        long steps = 0;
    };
    Snapshot snapshot() const { return {sharp_, diffuse_, steps_}; }
    void restore(const DiffuseState& s, const Snapshot& snap) {
        start(s);
        sharp_ = snap.sharp;
        diffuse_ = snap.diffuse;
        steps_ = snap.steps;
    }

private:
    /// int f g dx, pairwise summed.
    double weighted_integral(const ScalarField& f, const ScalarField& g) const {
        std::vector<double> p(spec_.size());
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = f.data[i] * g.data[i];
        return pairwise_sum(p) * spec_.cell_volume();
    }

    std::vector<SpaceTimeFunction> tests_;
    double sigma_;
    GridSpec spec_;
    std::vector<ScalarField> g_;  // spatial factors on the grid
    std::vector<double> a_prev_, chi_prev_, psi_prev_;  // time factor, int chi g, int psi g at the last state
    std::vector<TransportTerms> sharp_, diffuse_;
    bool started_ = false;
    long steps_ = 0;
};

}  // namespace dgmc
