#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "chirpctl/errors.hpp"
#include "chirpctl/pulse.hpp"
#include "oracles.hpp"

using namespace chirpctl;
namespace {
constexpr double pi = std::numbers::pi;

// Least-squares fit of arg(E) = p0 + p2 t^2 over |t| <= tau; returns p2.
double quadratic_phase(const SampledField& f, double tau) {
    double s00 = 0, s02 = 0, s22 = 0, y0 = 0, y2 = 0;
    for (std::size_t k = 0; k < f.times.size(); ++k) {
        const double t = f.times[k];
        if (std::abs(t) > tau) continue;
        const double t2 = t * t;
        const double y = std::arg(f.values[k]);
        s00 += 1;
        s02 += t2;
        s22 += t2 * t2;
        y0 += y;
        y2 += y * t2;
    }
    return (s00 * y2 - s02 * y0) / (s00 * s22 - s02 * s02);
}

double peak_magnitude(const SampledField& f) {
    double m = 0;
    for (auto v : f.values) m = std::max(m, std::abs(v));
    return m;
}
}  // namespace

TEST(SpectralField, CenterReturnsPeak) {
    const PulseSpec s = PulseSpec::from_dimensionless(pi, 2.52, 0.3);
    const auto e = spectral_field(0.0, s, 1.7);
    EXPECT_DOUBLE_EQ(e.real(), 1.7);
    EXPECT_DOUBLE_EQ(e.imag(), 0.0);
}

TEST(SpectralField, OneOverEHalfWidthForAnyChirp) {
    for (double c2p : {-4.0, 0.0, 2.52, 7.0}) {
        const PulseSpec s = PulseSpec::from_dimensionless(pi, c2p, 0.0, 3.0);
        EXPECT_NEAR(std::abs(spectral_field(3.0, s, 1.0)), std::exp(-1.0), 1e-15);
        EXPECT_NEAR(std::abs(spectral_field(-3.0, s, 1.0)), std::exp(-1.0), 1e-15);
    }
}

TEST(SpectralField, PhaseAtOneBandwidth) {
    const PulseSpec s = PulseSpec::from_dimensionless(pi, 2.52, 0.0);
    EXPECT_NEAR(std::arg(spectral_field(1.0, s, 1.0)) - std::arg(spectral_field(0.0, s, 1.0)), 1.26,
                1e-12);
}

TEST(SpectralField, RejectsNonFinite) {
    const PulseSpec s = PulseSpec::from_dimensionless(pi, 1.0, 0.0);
    EXPECT_THROW(spectral_field(NAN, s, 1.0), ConfigError);
    EXPECT_THROW(spectral_field(0.0, s, INFINITY), ConfigError);
}

TEST(PulseSpec, DimensionlessViewsAreExact) {
    const double dw = 1.8617e13;
    const PulseSpec s = PulseSpec::from_dimensionless(pi, 2.79, 0.56, dw);
    EXPECT_NEAR(s.chirp_prime(), 2.79, 1e-14);
    EXPECT_NEAR(s.detuning_prime(), 0.56, 1e-14);
    EXPECT_NEAR(s.detuning, 0.56 * dw, 1e-2);
}

TEST(PulseSpec, ValidationNamesField) {
    PulseSpec s;
    s.bandwidth = -1.0;
    try {
        s.validate();
        FAIL() << "negative bandwidth accepted";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("bandwidth"), std::string::npos);
    }
    s = PulseSpec{};
    s.area = -0.1;
    try {
        s.validate();
        FAIL() << "negative area accepted";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("area"), std::string::npos);
    }
    s = PulseSpec{};
    s.chirp = NAN;
    EXPECT_THROW(s.validate(), ConfigError);
}

TEST(TimeDomain, UnchirpedLimit) {
    const TimePulse p = to_time_domain(PulseSpec::from_dimensionless(pi, 0.0, 0.0));
    EXPECT_DOUBLE_EQ(p.duration, 2.0);
    EXPECT_DOUBLE_EQ(p.temporal_chirp, 0.0);
    EXPECT_NEAR(p.peak_rabi, pi / (2.0 * std::sqrt(pi)), 1e-15);
}

TEST(TimeDomain, StretchAndTemporalChirp) {
    const PulseSpec s = PulseSpec::from_dimensionless(pi, 2.52, 0.0);
    EXPECT_NEAR(stretch_factor(s), 1.609, 5e-4);
    const TimePulse p = to_time_domain(s);
    EXPECT_NEAR(p.temporal_chirp, 2.52 / 20.70, 1e-4);
    const oracle::Shape o = oracle::shape(pi, 2.52);
    EXPECT_NEAR(p.temporal_chirp, o.alpha, 1e-15);
    EXPECT_NEAR(p.duration, o.tau, 1e-15);
    EXPECT_NEAR(p.peak_rabi, o.omega0, 1e-15);
}

TEST(TimeDomain, ParityInChirp) {
    const TimePulse a = to_time_domain(PulseSpec::from_dimensionless(pi, 2.52, 0.0));
    const TimePulse b = to_time_domain(PulseSpec::from_dimensionless(pi, -2.52, 0.0));
    EXPECT_DOUBLE_EQ(a.duration, b.duration);
    EXPECT_DOUBLE_EQ(a.temporal_chirp, -b.temporal_chirp);
    EXPECT_GT(a.temporal_chirp, 0.0);
}

TEST(TimeDomain, PhysicalUnitsScale) {
    const double dw = 2.0e13;
    const TimePulse p = to_time_domain(PulseSpec::from_dimensionless(2 * pi, 1.0, 0.0, dw));
    const oracle::Shape o = oracle::shape(2 * pi, 1.0, dw);
    EXPECT_NEAR(p.duration / o.tau, 1.0, 1e-14);
    EXPECT_NEAR(p.temporal_chirp / o.alpha, 1.0, 1e-14);
    EXPECT_NEAR(p.area(), 2 * pi, 1e-12);
}

// Direct quadrature of the spectral integral reproduces the closed form:
// envelope width tau and phase -alpha t^2.
TEST(TimeDomain, MatchesDirectQuadrature) {
    for (double c2p : {-4.0, 1.0, 2.52}) {
        const oracle::Shape o = oracle::shape(pi, c2p);
        const oracle::cd e0 = oracle::synthesize(0.0, c2p);
        const oracle::cd e1 = oracle::synthesize(0.5 * o.tau, c2p);
        EXPECT_NEAR(std::abs(e1) / std::abs(e0), std::exp(-0.25), 1e-9) << c2p;
        const double dphase = std::arg(e1 / e0);
        EXPECT_NEAR(dphase, -o.alpha * 0.25 * o.tau * o.tau, 1e-9) << c2p;
    }
}

TEST(RabiEnvelope, PeakAndWidth) {
    const TimePulse p = to_time_domain(PulseSpec::from_dimensionless(1.3 * pi, 2.0, 0.0));
    EXPECT_DOUBLE_EQ(rabi_envelope(0.0, p), p.peak_rabi);
    EXPECT_NEAR(rabi_envelope(p.duration, p), p.peak_rabi / std::exp(1.0), 1e-15);
}

TEST(RabiEnvelope, QuadratureGivesAreaIndependentOfChirp) {
    for (double c2p : {0.0, 1.0, 2.52, -3.0, 10.0}) {
        const TimePulse p = to_time_domain(PulseSpec::from_dimensionless(1.78 * pi, c2p, 0.0));
        const int n = 4001;
        const double lim = 8.0 * p.duration;
        const double h = 2.0 * lim / (n - 1);
        double sum = 0.0;
        for (int k = 0; k < n; ++k) {
            const double w = (k == 0 || k == n - 1) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            sum += w * rabi_envelope(-lim + k * h, p);
        }
        EXPECT_NEAR(sum * h / 3.0 / (1.78 * pi), 1.0, 1e-8) << c2p;
    }
}

class OracleEquivalence : public ::testing::TestWithParam<double> {};

TEST_P(OracleEquivalence, EnvelopeAndPhase) {
    const double c2p = GetParam();
    const PulseSpec s = PulseSpec::from_dimensionless(pi, c2p, 0.0);
    const TimePulse p = to_time_domain(s);
    const SampledField f = time_pulse_oracle(s, OracleGrid::for_pulse(s));
    EXPECT_NEAR(peak_magnitude(f) / p.peak_rabi, 1.0, 1e-6);
    if (c2p != 0.0) {
        EXPECT_NEAR(-quadratic_phase(f, p.duration) / p.temporal_chirp, 1.0, 1e-4);
    } else {
        EXPECT_NEAR(quadratic_phase(f, p.duration), 0.0, 1e-10);
    }
}

INSTANTIATE_TEST_SUITE_P(Chirps, OracleEquivalence, ::testing::Values(-4.0, -1.0, 0.0, 1.0, 2.52, 4.0));

TEST(Oracle, ParsevalIndependentOfChirp) {
    auto energy = [](double c2p) {
        const PulseSpec s = PulseSpec::from_dimensionless(pi, c2p, 0.0);
        const OracleGrid grid = OracleGrid::for_pulse(PulseSpec::from_dimensionless(pi, 4.0, 0.0));
        const SampledField f = time_pulse_oracle(s, grid, 1.0);
        double e = 0;
        for (auto v : f.values) e += std::norm(v);
        return e * grid.step;
    };
    const double ref = energy(0.0);
    for (double c2p : {1.0, 2.52, -4.0}) EXPECT_NEAR(energy(c2p) / ref, 1.0, 1e-6) << c2p;
}

TEST(Oracle, UnderResolvedGridRejected) {
    const PulseSpec s = PulseSpec::from_dimensionless(pi, 2.52, 0.0);
    EXPECT_THROW(time_pulse_oracle(s, OracleGrid{1024, 0.001}), GridError);  // too short
    EXPECT_THROW(time_pulse_oracle(s, OracleGrid{1024, 2.0}), GridError);    // too coarse
    EXPECT_THROW(time_pulse_oracle(s, OracleGrid{1022, 0.1}), GridError);    // not a multiple of 4
}

TEST(Wavelength, ZeroAtReference) { EXPECT_DOUBLE_EQ(wavelength_detuning(kRubidiumD1Wavelength), 0.0); }

TEST(Wavelength, ExperimentalDetunings) {
    EXPECT_NEAR(wavelength_detuning(802e-9) / 2.13e13, 1.0, 0.03);
    EXPECT_NEAR(wavelength_detuning(798.5e-9) / 1.04e13, 1.0, 0.02);
    EXPECT_LT(wavelength_detuning(790e-9), 0.0);
    EXPECT_THROW(wavelength_detuning(-1.0), ConfigError);
}

TEST(Wavelength, CustomReference) {
    EXPECT_NEAR(wavelength_detuning(780e-9, 780e-9), 0.0, 1e-3);
    const double d = wavelength_detuning(781e-9, 780e-9);
    EXPECT_NEAR(d, 2 * pi * kSpeedOfLight * 1e-9 / (780e-9 * 781e-9), 1.0);
}

TEST(Bandwidth, FwhmConventionReproducesStarPoint) {
    EXPECT_NEAR(fwhm_from_bandwidth(1.0), 2.0 * std::sqrt(std::log(2.0)), 1e-15);
    const double dw = bandwidth_from_fwhm(3.1e13);
    EXPECT_NEAR(1.04e13 / dw / 0.56, 1.0, 0.01);
    EXPECT_NEAR(fwhm_from_bandwidth(dw), 3.1e13, 1.0);
}
