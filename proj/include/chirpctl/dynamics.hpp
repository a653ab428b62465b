#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "chirpctl/pulse.hpp"

namespace chirpctl {

using Matrix2c = Eigen::Matrix2cd;
using BlochVector = Eigen::Vector3d;

struct QuantumState {
    std::complex<double> c0{1.0, 0.0};
    std::complex<double> c1{0.0, 0.0};

    double norm_squared() const { return std::norm(c0) + std::norm(c1); }
};

// Overlap <a|b>.
std::complex<double> overlap(const QuantumState& a, const QuantumState& b);

enum class Frame {
    // H = 1/2 [[-D(t), W(t) e^{i phi}], [W(t) e^{-i phi}, D(t)]]
    DiagonalDetuning,
    // H = 1/2 [[0, W e^{-i chi + i phi}], [W e^{i chi - i phi}, 0]], chi = Int D dt
    PhaseOnCoupling,
};

struct PropagationSettings {
    double time_span_factor = 8.0;       // window is +-factor * duration
    double steps_per_rabi_cycle = 400.0;
    Frame frame = Frame::DiagonalDetuning;

    void validate() const;
};

// Full history of one propagation on its step grid. propagators[n] = U0(times[n]);
// step_integrals[n] = -i Int V dt over step n in the frame of U0(times[n]).
struct EvolutionRecord {
    std::vector<double> times;
    std::vector<Matrix2c> propagators;
    std::vector<QuantumState> states;
    std::vector<Matrix2c> step_integrals;
};

struct Propagation {
    QuantumState state;
    // -i Int U0^dag H_c U0 dt, with H_c the coupling part of H: the first-order
    // response of the final state to a relative amplitude change.
    Matrix2c sensitivity = Matrix2c::Zero();
    std::size_t steps = 0;
    std::optional<EvolutionRecord> record;
};

// H/hbar [rad/s] with the Rabi frequency scaled by (1 + scale).
Matrix2c hamiltonian(double t, const PulseSpec& spec, const TimePulse& pulse, double scale,
                     Frame frame = Frame::DiagonalDetuning);

// Instantaneous detuning delta - 2 alpha t.
double instantaneous_detuning(double t, const PulseSpec& spec, const TimePulse& pulse);

// Number of steps the propagator uses for this spec; independent of the scale.
std::size_t step_count(const PulseSpec& spec, const PropagationSettings& settings);

// Evolves |0> from -factor*tau to +factor*tau with a fourth-order Magnus
// exponential stepper. Each step is an exact SU(2) exponential, so the norm is
// preserved to rounding.
Propagation propagate(const PulseSpec& spec, const PropagationSettings& settings = {},
                      double scale = 0.0, bool record_history = false);

// Propagates at the given and doubled step density; throws ConvergenceError if
// the excited populations differ by more than `tolerance`. Returns the finer run.
Propagation propagate_checked(const PulseSpec& spec, const PropagationSettings& settings = {},
                              double scale = 0.0, double tolerance = 1e-8);

// Recomputes -i Int V dt from the recorded U0 history.
Matrix2c operator_integral(const EvolutionRecord& record);

double excited_probability(const QuantumState& state);

// (x, y, z) = (2 Re c0* c1, 2 Im c0* c1, |c1|^2 - |c0|^2). Throws ConfigError
// for states whose norm deviates from one by more than 1e-6.
BlochVector bloch_coordinates(const QuantumState& state);

// Rows: t, Re c0, Im c0, Re c1, Im c1, x, y, z.
void write_state_history(std::ostream& os, const EvolutionRecord& record);

}  // namespace chirpctl
