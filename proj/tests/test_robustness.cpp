#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "chirpctl/errors.hpp"
#include "chirpctl/records.hpp"
#include "chirpctl/robustness.hpp"
#include "oracles.hpp"

using namespace chirpctl;
namespace {
constexpr double pi = std::numbers::pi;
PulseSpec point(double theta_pi, double c2p, double dp) {
    return PulseSpec::from_dimensionless(theta_pi * pi, c2p, dp);
}
}  // namespace

TEST(Fidelity, UnityWithoutError) {
    for (double c2p : {0.0, 2.52}) EXPECT_NEAR(fidelity(point(1.78, c2p, 0.637), 0.0), 1.0, 1e-14);
}

TEST(Fidelity, ResonantClosedForm) {
    // |cos(gamma Theta / 2)| for a resonant unchirped pulse
    for (double g : {-0.3, 0.1, 0.45}) {
        EXPECT_NEAR(fidelity(point(0.5, 0.0, 0.0), g), std::abs(std::cos(g * pi / 4)), 1e-10);
        EXPECT_NEAR(fidelity(point(2.0, 0.0, 0.0), g), std::abs(std::cos(g * pi)), 1e-10);
    }
}

TEST(Fidelity, MatchesIndependentIntegrator) {
    EXPECT_NEAR(fidelity(point(1.78, 2.52, 0.637), 0.3), oracle::rk4_fidelity(1.78 * pi, 2.52, 0.637, 0.3),
                1e-8);
    EXPECT_NEAR(fidelity(point(1.2, 1.0, 0.2), -0.25), oracle::rk4_fidelity(1.2 * pi, 1.0, 0.2, -0.25),
                1e-8);
}

TEST(Fidelity, CurveIsDeterministicAcrossWorkers) {
    const auto gammas = symmetric_gamma_grid(0.5, 21);
    const auto a = fidelity_curve(point(1.78, 2.52, 0.637), gammas, {}, 1);
    const auto b = fidelity_curve(point(1.78, 2.52, 0.637), gammas, {}, 3);
    EXPECT_EQ(a.fidelities, b.fidelities);
    EXPECT_DOUBLE_EQ(a.fidelities[10], 1.0);
}

TEST(GammaGrid, SymmetricAndValidated) {
    const auto g = symmetric_gamma_grid(0.5, 201);
    ASSERT_EQ(g.size(), 201u);
    EXPECT_DOUBLE_EQ(g.front(), -0.5);
    EXPECT_DOUBLE_EQ(g[100], 0.0);
    EXPECT_DOUBLE_EQ(g.back(), 0.5);
    EXPECT_THROW(symmetric_gamma_grid(0.5, 20), ConfigError);
    EXPECT_THROW(symmetric_gamma_grid(0.0, 21), ConfigError);
    EXPECT_THROW(symmetric_gamma_grid(1.5, 21), ConfigError);
}

TEST(Curvature, RabiHalfInversion) {
    const auto spec = point(0.5, 0.0, 0.0);
    EXPECT_NEAR(curvature_fd(spec).value, pi * pi / 16, 1e-6);
    EXPECT_NEAR(curvature_perturbative(spec), pi * pi / 16, 1e-9);
}

TEST(Curvature, ResonantAreaSquaredLaw) {
    for (double t : {0.3, 1.0, 2.5}) {
        EXPECT_NEAR(curvature_perturbative(point(t, 0.0, 0.0)), std::pow(t * pi / 2, 2), 1e-8);
    }
}

TEST(Curvature, MethodsAgreeOffResonance) {
    for (auto [t, c2p, dp] : {std::tuple{1.2, 1.0, 0.637}, {2.3, 3.1, 0.4}, {0.8, -1.5, 0.9}}) {
        const auto spec = point(t, c2p, dp);
        const double gp = curvature_perturbative(spec);
        EXPECT_NEAR(curvature_fd(spec).value, gp, std::max(1e-6, 1e-4 * gp));
    }
}

TEST(Curvature, VanishesAtRobustPoint) {
    EXPECT_LT(curvature_perturbative(point(1.7802, 2.5259, 0.637)), 1e-6);
}

TEST(Curvature, FromSensitivityMatchesPerturbative) {
    const auto spec = point(1.1, 2.0, 0.3);
    EXPECT_NEAR(curvature_from_sensitivity(propagate(spec).sensitivity), curvature_perturbative(spec),
                1e-15);
}

TEST(Curvature, StepRangeEnforced) {
    EXPECT_THROW(curvature_fd(point(1, 0, 0), 1e-5), ConfigError);
    EXPECT_THROW(curvature_fd(point(1, 0, 0), 0.5), ConfigError);
}

TEST(RabiReference, AreaForTargetPopulation) {
    const RabiReference half = rabi_reference(0.5);
    EXPECT_NEAR(half.area, pi / 2, 1e-12);
    EXPECT_NEAR(half.curvature, pi * pi / 16, 1e-12);
    EXPECT_NEAR(rabi_reference(1.0).area, pi, 1e-12);
    EXPECT_THROW(rabi_reference(0.0), ConfigError);
    EXPECT_THROW(rabi_reference(1.2), ConfigError);
}

TEST(RobustWidth, InterpolatesBothSides) {
    FidelityCurve c;
    for (int k = -10; k <= 10; ++k) {
        const double g = 0.05 * k;
        c.gammas.push_back(g);
        c.fidelities.push_back(1.0 - (g < 0 ? 4.0 : 1.0) * g * g);  // asymmetric
    }
    const RobustWidth w = robust_width(c, 0.99);
    EXPECT_NEAR(w.lower, -0.05, 1e-3);
    EXPECT_NEAR(w.upper, 0.1, 1e-3);
    EXPECT_NEAR(w.width, w.upper - w.lower, 1e-15);
    EXPECT_FALSE(w.exceeds_grid);
}

TEST(RobustWidth, FlagsCurveThatNeverDrops) {
    FidelityCurve c{{-0.1, 0.0, 0.1}, {0.999, 1.0, 0.999}, {}};
    const RobustWidth w = robust_width(c, 0.99);
    EXPECT_TRUE(w.exceeds_grid);
    EXPECT_DOUBLE_EQ(w.width, 0.2);
}

TEST(RobustWidth, RabiClosedForm) {
    // |cos(gamma pi/4)| >= 0.99 for |gamma| <= (4/pi) acos(0.99)
    const auto gammas = symmetric_gamma_grid(0.5, 401);
    const auto curve = fidelity_curve(point(0.5, 0.0, 0.0), gammas);
    EXPECT_NEAR(robust_width(curve, 0.99).width, 8 / pi * std::acos(0.99), 1e-4);
}

TEST(Report, CollectsBothCurvaturesAndWidth) {
    const auto gammas = symmetric_gamma_grid(0.5, 101);
    const RobustnessReport r = robustness_report(point(0.5, 0.0, 0.0), gammas);
    EXPECT_NEAR(r.g_fd, r.g_pert, 1e-6);
    EXPECT_NEAR(r.width, 8 / pi * std::acos(0.99), 1e-3);
    EXPECT_DOUBLE_EQ(r.threshold, 0.99);
    std::ostringstream os;
    write_fidelity_curve(os, fidelity_curve(point(0.5, 0, 0), symmetric_gamma_grid(0.5, 3)));
    EXPECT_EQ(os.str().substr(0, 15), "gamma,fidelity\n");
}
