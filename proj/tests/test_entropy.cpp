#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "dgmc/allen_cahn.hpp"
#include "dgmc/calibration.hpp"
#include "dgmc/entropy.hpp"

using namespace dgmc;

namespace {

struct Circle : ::testing::Test {
    GridSpec g{2, 1.0, 256};
    double eps = 0.01;
    ClassicalSphere sph;

    void SetUp() override { sph.eps_min = eps; }
};

}  // namespace

TEST_F(Circle, AnalyticVarifoldHasNearZeroEntropy) {
    const auto cal = calibration_fields(sph, 0.0, g);
    const auto v = analytic_varifold(sph, 0.0, g);
    EXPECT_NEAR(v.mass() / (DoubleWell::sigma() * sph.perimeter(0.0)), 1.0, 1e-3);
    EXPECT_LT(relative_entropy(v, cal), 0.02 * DoubleWell::sigma() * sph.perimeter(0.0));
    EXPECT_EQ(bulk_error(analytic_phase(cal), cal), 0.0);
}

TEST_F(Circle, TiltedNormalsCostOneMinusCosine) {
    // Rotating every normal by alpha inside the plateau |s| < r_c / 2 where
    // xi = n exactly gives E = (1 - cos alpha) * mass there.
    auto cal = calibration_fields(sph, 0.0, g);
    auto v = analytic_varifold(sph, 0.0, g);
    const double alpha = 0.3, c = std::cos(alpha), s = std::sin(alpha);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto n = v.normal.at(i);
        v.normal.set(i, {c * n[0] - s * n[1], s * n[0] + c * n[1], 0.0});
    }
    const double base = relative_entropy(analytic_varifold(sph, 0.0, g), cal);
    EXPECT_NEAR(relative_entropy(v, cal) - base, (1.0 - c) * v.mass(), 1e-3 * v.mass());
}

TEST_F(Circle, BulkErrorOfShiftedBallByHand) {
    const auto cal = calibration_fields(sph, 0.0, g);
    ScalarField chi(g, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto x = g.position(i);
        x[0] -= 0.02;
        chi.data[i] = norm(periodic_delta(g, x, sph.center)) < sph.r0 ? 1.0 : 0.0;
    }
    double ref = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) ref += std::abs(chi.data[i] - cal.ball.data[i]) * std::abs(cal.theta.data[i]);
    ref *= DoubleWell::sigma() * g.cell_volume();
    EXPECT_GT(ref, 0.0);
    EXPECT_NEAR(bulk_error(PhaseIndicator{chi}, cal), ref, 1e-15);
}

TEST_F(Circle, CoercivityOnWellPreparedData) {
    const auto s = well_prepared_init(sph, eps, g);
    const auto v = build_varifold(s);
    const auto chi = phase_indicator(s.u);
    const auto cal = calibration_fields(sph, 0.0, g);
    const auto rho = multiplicity_field(v, chi, 32, eps);
    const auto r = coercivity_report(v, chi, cal, sph, rho);
    EXPECT_LT(r.tilt_identity_gap, 1e-12);
    EXPECT_NEAR(r.E_rel, r.E_rel_form2, 0.05 * r.mass);
    const double slack = g.h() / sph.r_c * r.mass;
    for (const auto& c : coercivity_checks(r, slack)) EXPECT_TRUE(c.pass) << c.name << ": " << c.lhs << " > " << c.rhs;
    EXPECT_EQ(coercivity_checks(r, slack).size(), 7u);
}

TEST_F(Circle, SignedBulkMatchesAbsoluteBulk) {
    // theta has the sign of chi - chi_ball everywhere, so the two integrals
    // agree exactly for any phase.
    const auto cal = calibration_fields(sph, 0.0, g);
    ScalarField chi(g, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) chi.data[i] = g.position(i)[0] < 0.6 ? 1.0 : 0.0;
    const auto v = analytic_varifold(sph, 0.0, g);
    const auto rho = multiplicity_field(v, PhaseIndicator{chi}, 32, eps);
    const auto r = coercivity_report(v, PhaseIndicator{chi}, cal, sph, rho);
    EXPECT_NEAR(r.bulk_signed, r.E_bulk, 1e-12 * r.E_bulk);
    EXPECT_LE(r.bulk_dist, r.E_bulk);
}

TEST(Gronwall, ConstantEntropyFitsZero) {
    std::vector<GronwallSample> s;
    for (int k = 0; k < 20; ++k) s.push_back({0.01 * k, 0.1, 0.05});
    const auto f = gronwall_monitor(s, 0.0);
    EXPECT_EQ(f.C_fit_rel, 0.0);
    EXPECT_EQ(f.C_fit_bulk, 0.0);
    EXPECT_TRUE(f.finite);
    EXPECT_EQ(f.E0, 0.1);
    EXPECT_EQ(f.ET, 0.1);
}

TEST(Gronwall, ExponentialGrowthRecoversRate) {
    // E = E0 exp(c t) saturates E(T) = E0 + c int E; the trapezoidal
    // integral slightly overestimates, so the fit lands just below c.
    const double c = 3.0;
    std::vector<GronwallSample> s;
    for (int k = 0; k <= 200; ++k) {
        const double t = 0.005 * k;
        s.push_back({t, std::exp(c * t), 0.0});
    }
    const auto f = gronwall_monitor(s, 0.0);
    EXPECT_NEAR(f.C_fit_rel, c, 1e-3 * c);
    EXPECT_LE(f.C_fit_rel, c);
}

TEST(Gronwall, JumpWithoutElapsedTimeIsInfinite) {
    // No C can explain growth over an empty integral.
    std::vector<GronwallSample> s = {{0.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
    for (int k = 1; k < 11; ++k) s.push_back({0.1 * k, 1.0, 0.0});
    const auto f = gronwall_monitor(s, 0.0);
    EXPECT_FALSE(f.finite);
    EXPECT_THROW(gronwall_monitor(std::vector<GronwallSample>(5), 0.0), std::invalid_argument);
}

TEST(Gronwall, SlackAbsorbsFloor) {
    std::vector<GronwallSample> s;
    for (int k = 0; k < 12; ++k) s.push_back({0.1 * k, 1e-6 * (k % 2), 0.0});
    EXPECT_EQ(gronwall_monitor(s, 2e-6).C_fit_rel, 0.0);
}
