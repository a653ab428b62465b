#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

namespace chirpctl {

inline constexpr double kSpeedOfLight = 299792458.0;     // m/s
inline constexpr double kRubidiumD1Wavelength = 794.98e-9;  // m

// Shaped pulse in the frequency domain:
//   E(w) = E0 exp[-(w - wc)^2 / dw^2 + i (c2/2) (w - wc)^2]
// The field amplitude is never stored; the pulse is fixed by its area.
struct PulseSpec {
    double area = 0.0;       // pulse area after shaping [rad]
    double chirp = 0.0;      // spectral chirp c2 [s^2]
    double detuning = 0.0;   // static detuning w0 - wc [rad/s]
    double bandwidth = 1.0;  // 1/e half-width of |E(w)| [rad/s]
    double cep = 0.0;        // carrier-envelope phase [rad]

    static PulseSpec from_dimensionless(double area, double chirp_prime, double detuning_prime,
                                        double bandwidth = 1.0, double cep = 0.0);

    double chirp_prime() const { return chirp * bandwidth * bandwidth; }
    double detuning_prime() const { return detuning / bandwidth; }

    // Throws ConfigError naming the first invalid field.
    void validate() const;
};

// Analytic time-domain form: Omega(t) = peak_rabi exp(-t^2/duration^2) with
// instantaneous carrier wc + 2 alpha t.
struct TimePulse {
    double peak_rabi = 0.0;       // [rad/s]
    double duration = 0.0;        // 1/e half-width of the envelope [s]
    double temporal_chirp = 0.0;  // alpha [rad/s^2]
    double cep = 0.0;

    double area() const;
};

// `omega_offset` is w - wc.
std::complex<double> spectral_field(double omega_offset, const PulseSpec& spec,
                                    double peak_amplitude);

// Chirp stretch factor sqrt(1 + (c2'/2)^2).
double stretch_factor(const PulseSpec& spec);

TimePulse to_time_domain(const PulseSpec& spec);

double rabi_envelope(double t, const TimePulse& pulse);

// Spectral peak amplitude (Rabi units) whose synthesized envelope has the
// spec's area under E(t) = (1/2pi) Int E(w) exp(-i w t) dw.
double spectral_peak_for_area(const PulseSpec& spec);

double bandwidth_from_fwhm(double fwhm);
double fwhm_from_bandwidth(double bandwidth);

// Static detuning for a carrier at lambda_c against a transition at lambda_0.
double wavelength_detuning(double lambda_c, double lambda_0 = kRubidiumD1Wavelength);

struct OracleGrid {
    std::size_t samples = 0;  // must be a multiple of 4
    double step = 0.0;        // [s]

    // Smallest power-of-two grid that resolves `spec` with the given margin.
    static OracleGrid for_pulse(const PulseSpec& spec, double span_in_durations = 16.0);
};

struct SampledField {
    std::vector<double> times;
    std::vector<std::complex<double>> values;
};

// Discrete inverse Fourier transform of the spectral field, used to check
// to_time_domain. Throws GridError when the grid is under-resolved. Without
// an explicit amplitude the area-matched spectral peak is used.
SampledField time_pulse_oracle(const PulseSpec& spec, const OracleGrid& grid,
                               std::optional<double> peak_amplitude = std::nullopt);

}  // namespace chirpctl
