#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include "chirpctl/errors.hpp"
#include "chirpctl/pulse.hpp"

namespace chirpctl {

namespace {

// FFTW planning is not thread-safe.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(p);
    }
};

constexpr double kSpectralReach = 6.0;  // |E(w)| ~ e^-36 beyond this many bandwidths

}  // namespace

OracleGrid OracleGrid::for_pulse(const PulseSpec& spec, double span_in_durations) {
    const TimePulse pulse = to_time_domain(spec);
    const double span = span_in_durations * pulse.duration;
    // Frequency half-span pi/step well past the spectral reach.
    double step = std::numbers::pi / (2.0 * kSpectralReach * spec.bandwidth);
    std::size_t n = 64;
    while (static_cast<double>(n) * step < span) n *= 2;
    return {n, step};
}

SampledField time_pulse_oracle(const PulseSpec& spec, const OracleGrid& grid,
                               std::optional<double> peak_amplitude) {
    spec.validate();
    const std::size_t n = grid.samples;
    if (n < 64 || n % 4 != 0) throw GridError("oracle grid needs >= 64 samples, a multiple of 4");
    if (!(grid.step > 0.0)) throw GridError("oracle grid step must be positive");

    const TimePulse pulse = to_time_domain(spec);
    const double span = static_cast<double>(n) * grid.step;
    if (span < 12.0 * pulse.duration) {
        throw GridError("oracle grid spans less than 12 pulse durations");
    }
    const double nyquist = std::numbers::pi / grid.step;
    if (nyquist < kSpectralReach * spec.bandwidth) {
        throw GridError("oracle grid step does not resolve the spectral bandwidth");
    }
    const double domega = 2.0 * std::numbers::pi / span;
    if (std::abs(spec.chirp) * kSpectralReach * spec.bandwidth * domega > std::numbers::pi) {
        throw GridError("oracle grid too short to sample the spectral chirp phase");
    }

    const double amplitude = peak_amplitude.value_or(spectral_peak_for_area(spec));
    const auto half = static_cast<std::ptrdiff_t>(n / 2);

    std::unique_ptr<fftw_complex[], decltype(&fftw_free)> buffer(
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)), &fftw_free);
    std::unique_ptr<fftw_plan_s, PlanDeleter> plan;
    {
        std::lock_guard lock(planner_mutex());
        plan.reset(fftw_plan_dft_1d(static_cast<int>(n), buffer.get(), buffer.get(), FFTW_FORWARD,
                                    FFTW_ESTIMATE));
    }

    // Centred grids: the (-1)^k and (-1)^j factors move the origin to n/2.
    for (std::size_t k = 0; k < n; ++k) {
        const double omega = static_cast<double>(static_cast<std::ptrdiff_t>(k) - half) * domega;
        std::complex<double> v = spectral_field(omega, spec, amplitude);
        if (k % 2 == 1) v = -v;
        buffer[k][0] = v.real();
        buffer[k][1] = v.imag();
    }
    fftw_execute(plan.get());

    SampledField out;
    out.times.resize(n);
    out.values.resize(n);
    const double scale = domega / (2.0 * std::numbers::pi);
    for (std::size_t j = 0; j < n; ++j) {
        out.times[j] = static_cast<double>(static_cast<std::ptrdiff_t>(j) - half) * grid.step;
        std::complex<double> v(buffer[j][0], buffer[j][1]);
        if (j % 2 == 1) v = -v;
        out.values[j] = scale * v;
    }
    return out;
}

}  // namespace chirpctl
