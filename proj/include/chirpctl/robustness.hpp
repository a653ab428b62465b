#pragma once

#include <span>
#include <vector>

#include "chirpctl/dynamics.hpp"
#include "chirpctl/pulse.hpp"

namespace chirpctl {

struct FidelityCurve {
    std::vector<double> gammas;
    std::vector<double> fidelities;
    PulseSpec reference;
};

struct CurvatureEstimate {
    double value = 0.0;   // Richardson-extrapolated
    double coarse = 0.0;  // central difference at h
    double fine = 0.0;    // central difference at h/2
    bool noisy = false;   // extrapolation moved the fine estimate by > 1e-3 (relative above g = 1)
};

struct RabiReference {
    double area = 0.0;
    double curvature = 0.0;
};

struct RobustWidth {
    double width = 0.0;
    double lower = 0.0;  // crossing below gamma = 0 (or grid edge)
    double upper = 0.0;
    bool exceeds_grid = false;
};

struct RobustnessReport {
    double g_fd = 0.0;
    double g_pert = 0.0;
    double width = 0.0;
    double threshold = 0.99;
    bool width_exceeds_grid = false;
    bool fd_noisy = false;
};

inline constexpr double kDefaultFiniteDifferenceStep = 0.02;
inline constexpr double kDefaultWidthThreshold = 0.99;

// F = |<psi(W)|psi(W + gamma W)>|.
double fidelity(const PulseSpec& spec, double gamma, const PropagationSettings& settings = {});

FidelityCurve fidelity_curve(const PulseSpec& spec, std::span<const double> gammas,
                             const PropagationSettings& settings = {}, unsigned workers = 1);

// -F''(0) from central differences at h and h/2 with F(0) = 1 exactly.
CurvatureEstimate curvature_fd(const PulseSpec& spec, double h = kDefaultFiniteDifferenceStep,
                               const PropagationSettings& settings = {});

// |<1| -i Int V dt |0>|^2 from the co-integrated operator integral.
double curvature_perturbative(const PulseSpec& spec, const PropagationSettings& settings = {});

double curvature_from_sensitivity(const Matrix2c& sensitivity);

// Resonant unchirped pulse reaching `target_pe` with its first solution.
RabiReference rabi_reference(double target_pe);

// Width of the contiguous interval around gamma = 0 where F >= threshold.
// Each side is located independently by linear interpolation.
RobustWidth robust_width(const FidelityCurve& curve, double threshold = kDefaultWidthThreshold);

std::vector<double> symmetric_gamma_grid(double half_range, std::size_t points);

RobustnessReport robustness_report(const PulseSpec& spec, std::span<const double> gammas,
                                   double threshold = kDefaultWidthThreshold,
                                   const PropagationSettings& settings = {},
                                   unsigned workers = 1);

}  // namespace chirpctl
