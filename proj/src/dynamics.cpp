#include "chirpctl/dynamics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "chirpctl/errors.hpp"

namespace chirpctl {

namespace {

using Vec3 = Eigen::Vector3d;
using cd = std::complex<double>;

// Bloch-vector form of a traceless Hamiltonian, H = drift.sigma + (1+scale) coupling.sigma.
struct SplitHamiltonian {
    Vec3 drift;
    Vec3 coupling;
};

SplitHamiltonian split_hamiltonian(double t, const PulseSpec& spec, const TimePulse& pulse,
                                   Frame frame) {
    const double half_rabi = 0.5 * rabi_envelope(t, pulse);
    SplitHamiltonian h;
    if (frame == Frame::DiagonalDetuning) {
        h.drift = Vec3(0.0, 0.0, -0.5 * instantaneous_detuning(t, spec, pulse));
        h.coupling = Vec3(half_rabi * std::cos(spec.cep), -half_rabi * std::sin(spec.cep), 0.0);
    } else {
        const double chi = spec.detuning * t - pulse.temporal_chirp * t * t;
        const double phase = spec.cep - chi;
        h.drift = Vec3::Zero();
        h.coupling = Vec3(half_rabi * std::cos(phase), -half_rabi * std::sin(phase), 0.0);
    }
    return h;
}

Matrix2c pauli(const Vec3& v) {
    Matrix2c m;
    m << cd(v.z(), 0.0), cd(v.x(), -v.y()), cd(v.x(), v.y()), cd(-v.z(), 0.0);
    return m;
}

// exp(-i a.sigma) and its derivative along b, both closed form.
struct StepExponential {
    Matrix2c propagator;
    Matrix2c derivative;
};

StepExponential su2_exponential(const Vec3& a, const Vec3& b) {
    const double theta = a.norm();
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    Vec3 n = Vec3::Zero();
    double sinc = 1.0;
    double bend = 0.0;  // cos(theta) - sinc(theta)
    if (theta > 1e-6) {
        n = a / theta;
        sinc = s / theta;
        bend = c - sinc;
    } else {
        sinc = 1.0 - theta * theta / 6.0;
        bend = -theta * theta / 3.0;
        if (theta > 0.0) n = a / theta;
    }
    const cd minus_i(0.0, -1.0);
    StepExponential out;
    out.propagator = c * Matrix2c::Identity() + minus_i * s * pauli(n);
    const double nb = n.dot(b);
    const Vec3 v = bend * nb * n + sinc * b;
    out.derivative = -s * nb * Matrix2c::Identity() + minus_i * pauli(v);
    return out;
}

QuantumState first_column(const Matrix2c& u) { return {u(0, 0), u(1, 0)}; }

}  // namespace

std::complex<double> overlap(const QuantumState& a, const QuantumState& b) {
    return std::conj(a.c0) * b.c0 + std::conj(a.c1) * b.c1;
}

void PropagationSettings::validate() const {
    if (!(time_span_factor >= 6.0)) throw ConfigError("time_span_factor must be >= 6");
    if (!(steps_per_rabi_cycle >= 50.0)) throw ConfigError("steps_per_rabi_cycle must be >= 50");
}

double instantaneous_detuning(double t, const PulseSpec& spec, const TimePulse& pulse) {
    return spec.detuning - 2.0 * pulse.temporal_chirp * t;
}

Matrix2c hamiltonian(double t, const PulseSpec& spec, const TimePulse& pulse, double scale,
                     Frame frame) {
    const SplitHamiltonian h = split_hamiltonian(t, spec, pulse, frame);
    return pauli(h.drift + (1.0 + scale) * h.coupling);
}

std::size_t step_count(const PulseSpec& spec, const PropagationSettings& settings) {
    const TimePulse pulse = to_time_domain(spec);
    const double window = 2.0 * settings.time_span_factor * pulse.duration;
    // Fastest rate inside the pulse core; outside it the coupling is negligible
    // and the exponential integrates the detuning exactly.
    const double core_detuning =
        std::abs(spec.detuning) + 2.0 * std::abs(pulse.temporal_chirp) * 3.0 * pulse.duration;
    const double rate = std::max({pulse.peak_rabi, core_detuning, 1.0 / pulse.duration});
    const double steps =
        std::ceil(window * rate * settings.steps_per_rabi_cycle / (2.0 * std::numbers::pi));
    return std::max<std::size_t>(32, static_cast<std::size_t>(steps));
}

Propagation propagate(const PulseSpec& spec, const PropagationSettings& settings, double scale,
                      bool record_history) {
    spec.validate();
    settings.validate();
    if (!std::isfinite(scale) || scale <= -1.0) throw ConfigError("scale must be > -1");

    const TimePulse pulse = to_time_domain(spec);
    const std::size_t steps = step_count(spec, settings);
    const double t_end = settings.time_span_factor * pulse.duration;
    const double h = 2.0 * t_end / static_cast<double>(steps);
    const double gauss_offset = std::sqrt(3.0) / 6.0;
    const double commutator_weight = std::sqrt(3.0) / 6.0 * h * h;

    Propagation result;
    result.steps = steps;
    if (record_history) {
        EvolutionRecord rec;
        rec.times.reserve(steps + 1);
        rec.propagators.reserve(steps + 1);
        rec.states.reserve(steps + 1);
        rec.step_integrals.reserve(steps);
        result.record = std::move(rec);
    }

    Matrix2c u = Matrix2c::Identity();
    Matrix2c sensitivity = Matrix2c::Zero();
    auto push_history = [&](double t) {
        if (!result.record) return;
        result.record->times.push_back(t);
        result.record->propagators.push_back(u);
        result.record->states.push_back(first_column(u));
    };
    push_history(-t_end);

    for (std::size_t k = 0; k < steps; ++k) {
        const double t0 = -t_end + static_cast<double>(k) * h;
        const SplitHamiltonian p1 = split_hamiltonian(t0 + (0.5 - gauss_offset) * h, spec, pulse,
                                                      settings.frame);
        const SplitHamiltonian p2 = split_hamiltonian(t0 + (0.5 + gauss_offset) * h, spec, pulse,
                                                      settings.frame);
        const Vec3 h1 = p1.drift + (1.0 + scale) * p1.coupling;
        const Vec3 h2 = p2.drift + (1.0 + scale) * p2.coupling;
        const Vec3 a = 0.5 * h * (h1 + h2) + commutator_weight * h2.cross(h1);
        const Vec3 b = 0.5 * h * (p1.coupling + p2.coupling) +
                       commutator_weight * (p2.coupling.cross(h1) + h2.cross(p1.coupling));
        const StepExponential step = su2_exponential(a, b);

        const Matrix2c step_integral = step.propagator.adjoint() * step.derivative;
        sensitivity += u.adjoint() * step_integral * u;
        if (result.record) result.record->step_integrals.push_back(step_integral);

        u = step.propagator * u;
        push_history(k + 1 == steps ? t_end : t0 + h);
    }

    result.state = first_column(u);
    result.sensitivity = sensitivity;
    return result;
}

Propagation propagate_checked(const PulseSpec& spec, const PropagationSettings& settings,
                              double scale, double tolerance) {
    const Propagation coarse = propagate(spec, settings, scale);
    PropagationSettings doubled = settings;
    doubled.steps_per_rabi_cycle *= 2.0;
    Propagation fine = propagate(spec, doubled, scale);
    const double pc = excited_probability(coarse.state);
    const double pf = excited_probability(fine.state);
    if (std::abs(pc - pf) > tolerance) {
        throw ConvergenceError(
            fmt::format("propagation not converged: P_e {:.12f} vs {:.12f} on step doubling", pc,
                        pf),
            pc, pf);
    }
    return fine;
}

Matrix2c operator_integral(const EvolutionRecord& record) {
    Matrix2c total = Matrix2c::Zero();
    for (std::size_t n = 0; n < record.step_integrals.size(); ++n) {
        const Matrix2c& u = record.propagators[n];
        total += u.adjoint() * record.step_integrals[n] * u;
    }
    return total;
}

double excited_probability(const QuantumState& state) { return std::norm(state.c1); }

BlochVector bloch_coordinates(const QuantumState& state) {
    if (std::abs(state.norm_squared() - 1.0) > 1e-6) {
        throw ConfigError("bloch_coordinates requires a normalized state");
    }
    const cd coherence = std::conj(state.c0) * state.c1;
    return {2.0 * coherence.real(), 2.0 * coherence.imag(),
            std::norm(state.c1) - std::norm(state.c0)};
}

void write_state_history(std::ostream& os, const EvolutionRecord& record) {
    os << "t,re_c0,im_c0,re_c1,im_c1,x,y,z\n";
    for (std::size_t n = 0; n < record.times.size(); ++n) {
        const QuantumState& s = record.states[n];
        const BlochVector r = bloch_coordinates(s);
        os << fmt::format("{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                          record.times[n], s.c0.real(), s.c0.imag(), s.c1.real(), s.c1.imag(),
                          r.x(), r.y(), r.z());
    }
}

}  // namespace chirpctl
