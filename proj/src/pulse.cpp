#include "chirpctl/pulse.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "chirpctl/errors.hpp"

namespace chirpctl {

namespace {

void require_finite(double value, const char* field) {
    if (!std::isfinite(value)) {
        throw ConfigError(std::string(field) + " must be finite");
    }
}

}  // namespace

PulseSpec PulseSpec::from_dimensionless(double area, double chirp_prime, double detuning_prime,
                                        double bandwidth, double cep) {
    PulseSpec spec;
    spec.area = area;
    spec.bandwidth = bandwidth;
    spec.chirp = chirp_prime / (bandwidth * bandwidth);
    spec.detuning = detuning_prime * bandwidth;
    spec.cep = cep;
    return spec;
}

void PulseSpec::validate() const {
    require_finite(area, "area");
    require_finite(chirp, "chirp");
    require_finite(detuning, "detuning");
    require_finite(bandwidth, "bandwidth");
    require_finite(cep, "cep");
    if (bandwidth <= 0.0) throw ConfigError("bandwidth must be positive");
    if (area < 0.0) throw ConfigError("area must be non-negative");
}

double TimePulse::area() const { return peak_rabi * std::sqrt(std::numbers::pi) * duration; }

std::complex<double> spectral_field(double omega_offset, const PulseSpec& spec,
                                    double peak_amplitude) {
    spec.validate();
    require_finite(omega_offset, "omega");
    require_finite(peak_amplitude, "peak amplitude");
    const double x2 = omega_offset * omega_offset;
    const double magnitude = std::exp(-x2 / (spec.bandwidth * spec.bandwidth));
    return peak_amplitude * std::polar(magnitude, 0.5 * spec.chirp * x2);
}

double stretch_factor(const PulseSpec& spec) {
    const double half = 0.5 * spec.chirp_prime();
    return std::sqrt(1.0 + half * half);
}

TimePulse to_time_domain(const PulseSpec& spec) {
    spec.validate();
    const double s = stretch_factor(spec);
    const double dw = spec.bandwidth;
    TimePulse pulse;
    pulse.duration = 2.0 * s / dw;
    pulse.temporal_chirp = spec.chirp * dw * dw * dw * dw / (8.0 * s * s);
    pulse.peak_rabi = spec.area / (std::sqrt(std::numbers::pi) * pulse.duration);
    pulse.cep = spec.cep;
    return pulse;
}

double rabi_envelope(double t, const TimePulse& pulse) {
    if (pulse.duration <= 0.0) return 0.0;
    const double u = t / pulse.duration;
    return pulse.peak_rabi * std::exp(-u * u);
}

double spectral_peak_for_area(const PulseSpec& spec) {
    spec.validate();
    return spec.area / std::sqrt(stretch_factor(spec));
}

double bandwidth_from_fwhm(double fwhm) { return fwhm / (2.0 * std::sqrt(std::numbers::ln2)); }

double fwhm_from_bandwidth(double bandwidth) {
    return bandwidth * 2.0 * std::sqrt(std::numbers::ln2);
}

double wavelength_detuning(double lambda_c, double lambda_0) {
    if (!(lambda_c > 0.0)) throw ConfigError("lambda_c must be positive");
    if (!(lambda_0 > 0.0)) throw ConfigError("lambda_0 must be positive");
    return 2.0 * std::numbers::pi * kSpeedOfLight * (lambda_c - lambda_0) / (lambda_0 * lambda_c);
}

}  // namespace chirpctl
