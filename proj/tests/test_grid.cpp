#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "dgmc/grid.hpp"

using namespace dgmc;

namespace {

ScalarField random_field(const GridSpec& g, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    ScalarField f(g);
    for (auto& v : f.data) v = U(rng);
    return f;
}

/// Cyclic shift by one cell along axis k.
ScalarField shifted(const ScalarField& f, int k) {
    ScalarField out(f.spec);
    for (std::size_t i = 0; i < f.size(); ++i) {
        auto c = f.spec.coords(i);
        c[k] += 1;
        out.data[f.spec.index(c)] = f.data[i];
    }
    return out;
}

}  // namespace

TEST(Grid, RejectsBadSpecs) {
    EXPECT_THROW(GridSpec(0, 1.0, 16), ConfigError);
    EXPECT_THROW(GridSpec(4, 1.0, 16), ConfigError);
    EXPECT_THROW(GridSpec(2, 1.0, 4), ConfigError);
    EXPECT_THROW(GridSpec(2, 0.0, 16), ConfigError);
    EXPECT_THROW(GridSpec(2, -1.0, 16), ConfigError);
    EXPECT_NO_THROW(GridSpec(3, 2.0, 8));
}

TEST(Grid, IndexRoundTripAndWrap) {
    GridSpec g(3, 1.0, 8);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g.index(g.coords(i)), i);
    EXPECT_EQ(g.index({-1, 0, 0}), g.index({7, 0, 0}));
    EXPECT_EQ(g.index({8, 9, -8}), g.index({0, 1, 0}));
    EXPECT_EQ(g.stride(1), 8u);
    EXPECT_EQ(g.stride(2), 64u);
}

TEST(Grid, CellCentres) {
    GridSpec g(2, 2.0, 16);
    const auto x = g.position(g.index({3, 5, 0}));
    EXPECT_DOUBLE_EQ(x[0], 3.5 * 0.125);
    EXPECT_DOUBLE_EQ(x[1], 5.5 * 0.125);
    EXPECT_EQ(x[2], 0.0);
    EXPECT_DOUBLE_EQ(g.cell_volume(), 0.125 * 0.125);
}

TEST(Grid, IntegralOfConstantIsBoxVolume) {
    for (int d = 1; d <= 3; ++d) {
        GridSpec g(d, 1.5, 16);
        EXPECT_NEAR(integrate(ScalarField(g, 2.0)), 2.0 * std::pow(1.5, d), 1e-12);
    }
}

TEST(Grid, LaplacianFourierEigenvalue) {
    // The periodic three-point stencil maps sin(2 pi k x) to
    // -(4/h^2) sin^2(pi k h) sin(2 pi k x).
    GridSpec g(2, 1.0, 32);
    const double h = g.h();
    for (int k : {1, 3, 7}) {
        auto f = sample(g, [&](const std::array<double, 3>& x) { return std::sin(2.0 * std::numbers::pi * k * x[1]); });
        const double lam = -4.0 / (h * h) * std::pow(std::sin(std::numbers::pi * k * h), 2);
        auto L = laplacian(f);
        for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(L.data[i], lam * f.data[i], 1e-9 * std::abs(lam));
    }
}

TEST(Grid, CentralGradientFourierSymbol) {
    GridSpec g(1, 1.0, 64);
    const double h = g.h();
    const int k = 5;
    auto f = sample(g, [&](const std::array<double, 3>& x) { return std::sin(2.0 * std::numbers::pi * k * x[0]); });
    auto G = gradient(f);
    const double sym = std::sin(2.0 * std::numbers::pi * k * h) / h;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double x = g.position(i)[0];
        EXPECT_NEAR(G.comp[0][i], sym * std::cos(2.0 * std::numbers::pi * k * x), 1e-10);
    }
}

TEST(Grid, ShiftCommutesWithStencils) {
    GridSpec g(3, 1.0, 8);
    auto f = random_field(g, 3);
    for (int k = 0; k < 3; ++k) {
        auto sf = shifted(f, k);
        EXPECT_EQ(laplacian(sf).data, shifted(laplacian(f), k).data);
        for (int a = 0; a < 3; ++a) {
            ScalarField ga(g), gsa(g);
            ga.data = gradient(f).comp[a];
            gsa.data = gradient(sf).comp[a];
            EXPECT_EQ(gsa.data, shifted(ga, k).data);
        }
    }
}

TEST(Grid, LaplacianIsSelfAdjoint) {
    GridSpec g(2, 1.0, 16);
    auto f = random_field(g, 1), u = random_field(g, 2);
    auto Lf = laplacian(f), Lu = laplacian(u);
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        a += u.data[i] * Lf.data[i];
        b += f.data[i] * Lu.data[i];
    }
    EXPECT_NEAR(a, b, 1e-9 * std::abs(a));
}

TEST(Grid, SymmetricGradientPairsWithLaplacian) {
    // Summation by parts: sum |grad u|^2 = -sum u Lap u.
    for (int d = 1; d <= 3; ++d) {
        GridSpec g(d, 1.0, 8);
        auto u = random_field(g, 10 + d);
        auto L = laplacian(u);
        double lhs = integrate(grad_sq_symmetric(u)), rhs = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) rhs -= u.data[i] * L.data[i];
        rhs *= g.cell_volume();
        EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(rhs));
    }
}

TEST(Grid, DivergenceOfConstantFieldVanishes) {
    GridSpec g(3, 1.0, 8);
    VectorField v(g, 0.7);
    for (double x : divergence(v).data) EXPECT_EQ(x, 0.0);
}

TEST(Grid, PairwiseSumIsAccurate) {
    std::vector<double> x(100000);
    long double ref = 0.0L;
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (auto& v : x) {
        v = U(rng) * 1e-3 + 1.0;
        ref += v;
    }
    EXPECT_NEAR(pairwise_sum(x), static_cast<double>(ref), 1e-10);
}

TEST(Grid, PeriodicDeltaIsMinimumImage) {
    GridSpec g(2, 1.0, 16);
    auto d = periodic_delta(g, {0.05, 0.95, 0.0}, {0.95, 0.05, 0.0});
    EXPECT_NEAR(d[0], 0.1, 1e-15);
    EXPECT_NEAR(d[1], -0.1, 1e-15);
}

TEST(Grid, MismatchedGridsAreRejected) {
    EXPECT_THROW(require_same_grid(GridSpec(2, 1.0, 16), GridSpec(2, 1.0, 32), "test"), ConfigError);
}
