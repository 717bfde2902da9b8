#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "dgmc/allen_cahn.hpp"
#include "dgmc/energy.hpp"

using namespace dgmc;

namespace {

DiffuseState random_state(const GridSpec& g, double eps, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    DiffuseState s{ScalarField(g), eps, 0.0};
    for (auto& v : s.u.data) v = U(rng);
    return s;
}

double volume_above_half(const ScalarField& u) {
    double n = 0.0;
    for (double v : u.data) n += v > 0.5 ? 1.0 : 0.0;
    return n * u.spec.cell_volume();
}

}  // namespace

TEST(AllenCahn, AutoStepUsesReactionLimit) {
    GridSpec g(2, 1.0, 64);
    const double eps = 0.05;
    EXPECT_DOUBLE_EQ(reaction_time_constant(), 1.0 / 0.83);
    EXPECT_NEAR(StepScheme::auto_dt(g, eps), StepScheme::kAutoDtFactor * eps * eps / 0.83, 1e-18);
    // Explicit: the diffusive limit 0.9 h^2 / (2d) binds here.
    const double h = g.h();
    EXPECT_DOUBLE_EQ(StepScheme::max_stable_dt(StepScheme::Kind::Explicit, g, eps), 0.9 * h * h / 4.0);
}

TEST(AllenCahn, StabilityLimitIsEnforced) {
    GridSpec g(2, 1.0, 64);
    const double eps = 0.05;
    const double lim = StepScheme::max_stable_dt(StepScheme::Kind::SemiImplicit, g, eps);
    EXPECT_THROW(AllenCahnStepper(g, eps, {StepScheme::Kind::SemiImplicit, 1.01 * lim}), ConfigError);
    EXPECT_THROW(AllenCahnStepper(g, eps, {StepScheme::Kind::SemiImplicit, 0.0}), ConfigError);
    EXPECT_NO_THROW(AllenCahnStepper(g, eps, {StepScheme::Kind::SemiImplicit, lim}));
}

TEST(AllenCahn, UnderResolvedLayerIsRejected) {
    GridSpec g(2, 1.0, 64);
    DiffuseState s{ScalarField(g), 1.9 * g.h(), 0.0};
    EXPECT_THROW(s.validate(), ConfigError);
    EXPECT_THROW(well_prepared_init(ClassicalSphere{}, 0.01, g), ConfigError);
}

TEST(AllenCahn, InterfaceNearSeamIsRejected) {
    GridSpec g(2, 1.0, 256);
    ClassicalSphere sph;
    sph.r0 = 0.45;
    EXPECT_THROW(well_prepared_init(sph, 0.01, g), ConfigError);
}

TEST(AllenCahn, HelmholtzSolveIsExact) {
    GridSpec g(3, 1.0, 16);
    HelmholtzSolver solver(g, 3e-4);
    auto b = random_state(g, 0.2, 4).u;
    auto x = solver.solve(b);
    EXPECT_LT(solver.relative_residual(x, b), 1e-13);
}

TEST(AllenCahn, WellsAndMidpointAreFixedPoints) {
    GridSpec g(2, 1.0, 32);
    const double eps = 0.1;
    for (auto kind : {StepScheme::Kind::Explicit, StepScheme::Kind::SemiImplicit}) {
        StepScheme sc{kind, StepScheme::auto_dt(g, eps, kind)};
        for (double c : {0.0, 0.5, 1.0}) {
            DiffuseState s{ScalarField(g, c), eps, 0.0};
            auto n = step(s, sc);
            for (double v : n.u.data) EXPECT_NEAR(v, c, 1e-15);
            EXPECT_DOUBLE_EQ(n.time, sc.dt);
        }
    }
}

TEST(AllenCahn, EnergyDecreasesFromRandomData) {
    GridSpec g(2, 1.0, 32);
    const double eps = 0.08;
    for (auto kind : {StepScheme::Kind::Explicit, StepScheme::Kind::SemiImplicit}) {
        AllenCahnStepper st(g, eps, {kind, StepScheme::max_stable_dt(kind, g, eps)});
        auto s = random_state(g, eps, 11);
        double E = energy(s.u, eps);
        for (int k = 0; k < 30; ++k) {
            s = st.step(s, k);
            const double En = energy(s.u, eps);
            EXPECT_LE(En, E);
            E = En;
        }
    }
}

TEST(AllenCahn, DataInUnitIntervalStayNearIt) {
    GridSpec g(2, 1.0, 32);
    const double eps = 0.08;
    AllenCahnStepper st(g, eps, {StepScheme::Kind::SemiImplicit, StepScheme::auto_dt(g, eps)});
    auto s = random_state(g, eps, 12);
    for (int k = 0; k < 50; ++k) {
        s = st.step(s, k);
        for (double v : s.u.data) {
            EXPECT_GE(v, -1e-3);
            EXPECT_LE(v, 1.0 + 1e-3);
        }
    }
}

TEST(AllenCahn, BlowUpIsDetectedWithStepIndex) {
    GridSpec g(1, 1.0, 16);
    const double eps = 0.2;
    DiffuseState s{ScalarField(g, 20.0), eps, 0.0};
    AllenCahnStepper st(g, eps, {StepScheme::Kind::Explicit, StepScheme::auto_dt(g, eps, StepScheme::Kind::Explicit)});
    try {
        st.step(s, 42);
        FAIL() << "expected a blow-up";
    } catch (const BlowUpError& e) {
        EXPECT_EQ(e.step(), 42);
    }
}

TEST(AllenCahn, SchemesAgreeToFirstOrder) {
    GridSpec g(1, 1.0, 256);
    const double eps = 0.024;
    auto s0 = well_prepared_init(PlanarSlab{0.5, 0.2}, eps, g);
    // Perturb so that something moves.
    for (std::size_t i = 0; i < s0.u.size(); ++i) s0.u.data[i] += 0.05 * std::sin(2.0 * std::numbers::pi * 3 * g.position(i)[0]);
    auto run = [&](StepScheme::Kind kind, double dt, double T) {
        AllenCahnStepper st(g, eps, {kind, dt});
        auto s = s0;
        const long n = std::lround(T / dt);
        for (long k = 0; k < n; ++k) s = st.step(s, k);
        return s.u;
    };
    const double T = 2e-4;
    const double dte = StepScheme::max_stable_dt(StepScheme::Kind::Explicit, g, eps) / 2;
    auto ref = run(StepScheme::Kind::Explicit, T / std::ceil(T / dte), T);
    auto diff = [&](double dt) {
        auto u = run(StepScheme::Kind::SemiImplicit, dt, T);
        double m = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) m = std::max(m, std::abs(u.data[i] - ref.data[i]));
        return m;
    };
    const double e1 = diff(T / 10), e2 = diff(T / 20);
    EXPECT_LT(e2, 0.6 * e1);
    EXPECT_LT(e1, 0.05);
}

TEST(AllenCahn, StandingWaveIsStationary) {
    GridSpec g(1, 1.0, 512);
    const double eps = 8.0 * g.h();
    auto s = well_prepared_init(PlanarSlab{0.5, 0.25}, eps, g);
    const auto u0 = s.u;
    AllenCahnStepper st(g, eps, {StepScheme::Kind::SemiImplicit, StepScheme::auto_dt(g, eps)});
    for (int k = 0; k < 200; ++k) s = st.step(s, k);
    double m = 0.0;
    for (std::size_t i = 0; i < u0.size(); ++i) m = std::max(m, std::abs(s.u.data[i] - u0.data[i]));
    // The two layers interact only through exp(-0.5 / (sqrt2 eps)) tails.
    EXPECT_LT(m, 1e-4);
    EXPECT_NEAR(volume_above_half(s.u), 0.5, 2 * g.h());
}

TEST(AllenCahn, DiscreteDissipationBalanceIsFirstOrder) {
    GridSpec g(2, 1.0, 64);
    const double eps = 0.035;
    ClassicalSphere sph;
    sph.r0 = 0.2;
    sph.eps_min = eps;
    auto s = well_prepared_init(sph, eps, g);
    auto gap = [&](double dt) {
        auto n = step(s, {StepScheme::Kind::SemiImplicit, dt});
        auto r = dissipation_rate(s, n, dt);
        return std::abs(r.rate_lhs - r.rate_rhs) / std::abs(r.rate_rhs);
    };
    const double dt = StepScheme::auto_dt(g, eps);
    const double a = gap(dt), b = gap(dt / 2), c = gap(dt / 4);
    EXPECT_LT(a, 0.05);
    // At least first order: each halving at least nearly halves the gap.
    EXPECT_LT(b, 0.6 * a);
    EXPECT_LT(c, 0.6 * b);
}

TEST(AllenCahn, CircleShrinksAtCurvatureSpeed) {
    GridSpec g(2, 1.0, 256);
    const double eps = 0.01;
    ClassicalSphere sph;
    sph.eps_min = eps;
    auto s = well_prepared_init(sph, eps, g);
    AllenCahnStepper st(g, eps, {StepScheme::Kind::SemiImplicit, StepScheme::auto_dt(g, eps)});
    const double T = 0.008;
    const long n = std::lround(T / st.scheme().dt);
    for (long k = 0; k < n; ++k) s = st.step(s, k);
    const double r = std::sqrt(volume_above_half(s.u) / std::numbers::pi);
    EXPECT_NEAR(r / sph.radius(s.time), 1.0, 0.02);
}
