#include "chirpctl/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chirpctl/errors.hpp"
#include "chirpctl/parallel.hpp"

namespace chirpctl {

namespace {

double clamp_unit(double f) { return std::clamp(f, 0.0, 1.0); }

double crossing(double g_in, double f_in, double g_out, double f_out, double threshold) {
    const double w = (f_in - threshold) / (f_in - f_out);
    return g_in + w * (g_out - g_in);
}

}  // namespace

double fidelity(const PulseSpec& spec, double gamma, const PropagationSettings& settings) {
    if (!(gamma > -1.0)) throw ConfigError("gamma must be > -1");
    if (gamma == 0.0) return 1.0;
    const QuantumState nominal = propagate(spec, settings).state;
    const QuantumState shifted = propagate(spec, settings, gamma).state;
    return clamp_unit(std::abs(overlap(nominal, shifted)));
}

FidelityCurve fidelity_curve(const PulseSpec& spec, std::span<const double> gammas,
                             const PropagationSettings& settings, unsigned workers) {
    for (double g : gammas) {
        if (!(g > -1.0)) throw ConfigError("gamma must be > -1");
    }
    FidelityCurve curve;
    curve.reference = spec;
    curve.gammas.assign(gammas.begin(), gammas.end());
    curve.fidelities.assign(gammas.size(), 1.0);
    const QuantumState nominal = propagate(spec, settings).state;
    parallel_for(gammas.size(), workers, [&](std::size_t i) {
        if (gammas[i] == 0.0) return;
        const QuantumState shifted = propagate(spec, settings, gammas[i]).state;
        curve.fidelities[i] = clamp_unit(std::abs(overlap(nominal, shifted)));
    });
    return curve;
}

CurvatureEstimate curvature_fd(const PulseSpec& spec, double h,
                               const PropagationSettings& settings) {
    if (!(h >= 1e-3 && h <= 0.1)) throw ConfigError("finite-difference step must lie in [1e-3, 0.1]");
    const QuantumState nominal = propagate(spec, settings).state;
    auto second_difference = [&](double step) {
        const double up = std::abs(overlap(nominal, propagate(spec, settings, step).state));
        const double down = std::abs(overlap(nominal, propagate(spec, settings, -step).state));
        return -(up - 2.0 + down) / (step * step);
    };
    CurvatureEstimate est;
    est.coarse = second_difference(h);
    est.fine = second_difference(0.5 * h);
    est.value = (4.0 * est.fine - est.coarse) / 3.0;
    est.noisy = std::abs(est.value - est.fine) > 1e-3 * std::max(1.0, std::abs(est.value));
    return est;
}

double curvature_from_sensitivity(const Matrix2c& sensitivity) {
    return std::norm(sensitivity(1, 0));
}

double curvature_perturbative(const PulseSpec& spec, const PropagationSettings& settings) {
    return curvature_from_sensitivity(propagate(spec, settings).sensitivity);
}

RabiReference rabi_reference(double target_pe) {
    if (!(target_pe > 0.0 && target_pe <= 1.0)) {
        throw ConfigError("target P_e must lie in (0, 1]");
    }
    RabiReference ref;
    ref.area = 2.0 * std::asin(std::sqrt(target_pe));
    ref.curvature = 0.25 * ref.area * ref.area;
    return ref;
}

RobustWidth robust_width(const FidelityCurve& curve, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
    const auto& g = curve.gammas;
    const auto& f = curve.fidelities;
    if (g.size() != f.size() || g.size() < 3) throw ConfigError("fidelity curve needs >= 3 samples");
    if (!std::is_sorted(g.begin(), g.end())) throw ConfigError("gamma grid must be increasing");
    if (g.front() > 0.0 || g.back() < 0.0) throw ConfigError("gamma grid must contain 0");

    std::size_t centre = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (std::abs(g[i]) < best) {
            best = std::abs(g[i]);
            centre = i;
        }
    }
    if (f[centre] < threshold) throw ConfigError("fidelity at gamma = 0 is below the threshold");

    RobustWidth out;
    std::size_t i = centre;
    while (i > 0 && f[i - 1] >= threshold) --i;
    if (i == 0) {
        out.lower = g.front();
        out.exceeds_grid = true;
    } else {
        out.lower = crossing(g[i], f[i], g[i - 1], f[i - 1], threshold);
    }
    std::size_t j = centre;
    while (j + 1 < g.size() && f[j + 1] >= threshold) ++j;
    if (j + 1 == g.size()) {
        out.upper = g.back();
        out.exceeds_grid = true;
    } else {
        out.upper = crossing(g[j], f[j], g[j + 1], f[j + 1], threshold);
    }
    out.width = out.upper - out.lower;
    return out;
}

std::vector<double> symmetric_gamma_grid(double half_range, std::size_t points) {
    if (points < 3 || points % 2 == 0) throw ConfigError("gamma grid needs an odd count >= 3");
    if (!(half_range > 0.0 && half_range < 1.0)) throw ConfigError("gamma range must lie in (0, 1)");
    std::vector<double> grid(points);
    const auto half = static_cast<std::ptrdiff_t>(points / 2);
    for (std::size_t i = 0; i < points; ++i) {
        grid[i] = half_range * static_cast<double>(static_cast<std::ptrdiff_t>(i) - half) /
                  static_cast<double>(half);
    }
    grid[points / 2] = 0.0;
    return grid;
}

RobustnessReport robustness_report(const PulseSpec& spec, std::span<const double> gammas,
                                   double threshold, const PropagationSettings& settings,
                                   unsigned workers) {
    RobustnessReport report;
    const CurvatureEstimate fd = curvature_fd(spec, kDefaultFiniteDifferenceStep, settings);
    report.g_fd = fd.value;
    report.fd_noisy = fd.noisy;
    report.g_pert = curvature_perturbative(spec, settings);
    const RobustWidth w = robust_width(fidelity_curve(spec, gammas, settings, workers), threshold);
    report.width = w.width;
    report.width_exceeds_grid = w.exceeds_grid;
    report.threshold = threshold;
    return report;
}

}  // namespace chirpctl
