// Acceptance checks. One line per criterion: "criterion N: PASS|FAIL ...".
// Usage: acceptance [--criterion N]...   (all criteria when none given)

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "chirpctl/explorer.hpp"
#include "chirpctl/geometry.hpp"
#include "chirpctl/parallel.hpp"
#include "chirpctl/robustness.hpp"

using namespace chirpctl;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
    bool pass;
    std::string detail;
};

const SearchBox kBox{pi, 3 * pi, 1.0, 4.0};

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

Outcome point_b() {
    const auto t0 = std::chrono::steady_clock::now();
    const RobustPoint p = find_robust_point(0.637, kBox, std::nullopt, {}, {}, default_workers());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = within(p.theta / pi, 1.78, 0.05) && within(p.chirp_prime, 2.52, 0.1) && p.g <= 0.01 &&
                    within(p.pe, 0.50, 0.02) && secs < 300.0;
    return {ok, fmt::format("Theta={:.4f}pi c2'={:.4f} g={:.2e} P_e={:.4f} in {:.1f} s", p.theta / pi,
                            p.chirp_prime, p.g, p.pe, secs)};
}

Outcome rabi_curvature() {
    const PulseSpec s = PulseSpec::from_dimensionless(pi / 2, 0.0, 0.0);
    const double fd = curvature_fd(s).value;
    const double gp = curvature_perturbative(s);
    const double ref = pi * pi / 16;
    return {within(fd, ref, 1e-3) && within(gp, ref, 1e-3),
            fmt::format("g_fd={:.6f} g_pert={:.6f} target={:.6f}", fd, gp, ref)};
}

Outcome star_point() {
    const RobustPoint p = find_robust_point(0.56, kBox, std::nullopt, {}, {}, default_workers());
    const bool ok = within(p.theta / pi, 1.9, 0.05) && within(p.chirp_prime, 2.79, 0.1) &&
                    within(p.pe, 0.6, 0.03);
    return {ok, fmt::format("Theta={:.4f}pi c2'={:.4f} g={:.2e} P_e={:.4f}", p.theta / pi, p.chirp_prime,
                            p.g, p.pe)};
}

Outcome cusp_topology() {
    const unsigned w = default_workers();
    std::vector<CuspReport> reps;
    for (double c2p : {1.5, 2.52, 3.5}) {
        reps.push_back(classify_topology(theta_trajectory(c2p, 0.637, 1.0 * pi, 2.6 * pi, 161, {}, 0.0, w),
                                         {}, {}, w));
    }
    const bool ok = reps[0].classification == Topology::Looped && reps[1].classification == Topology::Cusp &&
                    reps[2].classification == Topology::Unlooped && within(reps[1].theta_star / pi, 1.78, 0.05);
    return {ok, fmt::format("{} / {} / {}, cusp Theta*={:.4f}pi", to_string(reps[0].classification),
                            to_string(reps[1].classification), to_string(reps[2].classification),
                            reps[1].theta_star / pi)};
}

Outcome method_agreement() {
    double worst = 0.0;  // |g_fd - g_pert| / allowed
    std::string where;
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            const double theta = (0.5 + 2.5 * i / 4.0) * pi;
            const double c2p = 4.0 * j / 4.0;
            const PulseSpec s = PulseSpec::from_dimensionless(theta, c2p, 0.637);
            const double fd = curvature_fd(s).value;
            const double gp = curvature_perturbative(s);
            const double ratio = std::abs(fd - gp) / std::max(1e-3, 0.02 * std::abs(gp));
            if (ratio >= worst) {
                worst = ratio;
                where = fmt::format("Theta={:.3f}pi c2'={:.1f}: g_fd={:.6g} g_pert={:.6g}", theta / pi, c2p,
                                    fd, gp);
            }
        }
    }
    return {worst <= 1.0, fmt::format("worst fraction of tolerance {:.2e} at {}", worst, where)};
}

Outcome table_curves() {
    const RobustLine line = trace_robust_line(0.1, 1.2, 23, {}, {}, default_workers());
    if (!line.complete) return {false, "robust line incomplete: " + line.failure};
    struct Row {
        FitVariable v;
        LogisticFit reference;
    };
    const Row rows[] = {
        {FitVariable::DetuningPrime, {-0.055, 1.19, 0.079, -4.20, FitVariable::DetuningPrime}},
        {FitVariable::ChirpPrime, {-0.097, 1.076, 22.5, 1.32, FitVariable::ChirpPrime}},
        {FitVariable::ThetaOverPi, {-0.0033, 1.019, 264, 3.14, FitVariable::ThetaOverPi}},
    };
    bool ok = true;
    std::string detail;
    for (const Row& row : rows) {
        std::vector<double> xs, ys;
        for (const RobustPoint& p : line.points) {
            if (p.pe >= kFitPeMin && p.pe <= kFitPeMax) {
                xs.push_back(line_coordinate(p, row.v));
                ys.push_back(p.pe);
            }
        }
        const LogisticFit fit = fit_logistic(xs, ys, row.v);
        double ss = 0.0;
        int n = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (ys[i] < 0.1 || ys[i] > 0.95) continue;
            ss += std::pow(fit(xs[i]) - row.reference(xs[i]), 2);
            ++n;
        }
        const double rms = n ? std::sqrt(ss / n) : INFINITY;
        ok = ok && n >= 6 && rms <= 0.05;
        detail += fmt::format("{}{} rms={:.4f} (n={})", detail.empty() ? "" : ", ", to_string(row.v), rms, n);
    }
    return {ok, detail};
}

Outcome width_ratio() {
    const unsigned w = default_workers();
    const RobustPoint b = find_robust_point(0.637, kBox, std::nullopt, {}, {}, w);
    const auto gammas = symmetric_gamma_grid(0.8, 1601);
    const RobustWidth wb =
        robust_width(fidelity_curve(PulseSpec::from_dimensionless(b.theta, b.chirp_prime, 0.637), gammas, {}, w));
    const RabiReference rabi = rabi_reference(0.5);
    const RobustWidth wr =
        robust_width(fidelity_curve(PulseSpec::from_dimensionless(rabi.area, 0.0, 0.0), gammas, {}, w));
    const double ratio = wb.width / wr.width;
    const bool ok = !wb.exceeds_grid && !wr.exceeds_grid && ratio >= 2.5 && ratio <= 4.5;
    return {ok, fmt::format("width B={:.4f} [{:.4f}, {:.4f}], Rabi={:.4f}, ratio={:.4f} (band 2.5..4.5)",
                            wb.width, wb.lower, wb.upper, wr.width, ratio)};
}

Outcome property_suite() {
    std::vector<std::string> failed;
    auto check = [&](bool ok, const std::string& name) {
        if (!ok) failed.push_back(name);
    };
    auto pe = [](const PulseSpec& s, const PropagationSettings& set = {}) {
        return excited_probability(propagate(s, set).state);
    };
    const PulseSpec b = PulseSpec::from_dimensionless(1.78 * pi, 2.52, 0.637);

    double drift = 0.0;
    for (double c2p : {0.0, 2.52, -5.0}) {
        const auto p = propagate(PulseSpec::from_dimensionless(5.0 * pi, c2p, 0.8), {}, 0.0, true);
        for (const auto& s : p.record->states) drift = std::max(drift, std::abs(s.norm_squared() - 1.0));
    }
    check(drift < 1e-9, "norm");

    check(std::abs(fidelity(b, 0.0) - 1.0) < 1e-12, "F(0)");

    bool oracle_ok = true;
    for (double c2p : {-4.0, -1.0, 0.0, 1.0, 2.52, 4.0}) {
        const PulseSpec s = PulseSpec::from_dimensionless(pi, c2p, 0.0);
        const TimePulse tp = to_time_domain(s);
        const SampledField f = time_pulse_oracle(s, OracleGrid::for_pulse(s));
        double peak = 0.0, s00 = 0, s02 = 0, s22 = 0, y0 = 0, y2 = 0;
        for (std::size_t k = 0; k < f.times.size(); ++k) {
            peak = std::max(peak, std::abs(f.values[k]));
            const double t = f.times[k];
            if (std::abs(t) > tp.duration) continue;
            const double y = std::arg(f.values[k]);
            s00 += 1, s02 += t * t, s22 += t * t * t * t, y0 += y, y2 += y * t * t;
        }
        const double curv = (s00 * y2 - s02 * y0) / (s00 * s22 - s02 * s02);
        oracle_ok = oracle_ok && std::abs(peak / tp.peak_rabi - 1.0) < 1e-6;
        if (c2p != 0.0) oracle_ok = oracle_ok && std::abs(-curv / tp.temporal_chirp - 1.0) < 1e-4;
    }
    check(oracle_ok, "pulse oracle");

    PulseSpec shifted = b;
    shifted.cep = 1.3;
    check(std::abs(pe(shifted) - pe(b)) < 1e-10, "CEP invariance");

    check(std::abs(pe(PulseSpec::from_dimensionless(1.78 * pi, 2.52, 0.637, 1.8617e13)) - pe(b)) < 1e-8,
          "bandwidth rescaling");

    EnsembleModel tiny;
    tiny.ratio = 1e-4;
    const double avg = ensemble_average(
                           [&](double scale) {
                               PulseSpec s = b;
                               s.area *= scale;
                               return pe(s);
                           },
                           tiny)
                           .value;
    check(std::abs(avg - pe(b)) < 1e-6, "ensemble limit");

    PropagationSettings fine;
    fine.steps_per_rabi_cycle *= 2;
    check(std::abs(pe(b) - pe(b, fine)) < 1e-8, "step halving");

    std::string detail = "norm drift " + fmt::format("{:.1e}", drift);
    for (const auto& f : failed) detail += ", failed: " + f;
    return {failed.empty(), detail};
}

struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "point B reproduction", point_b},
        {2, "Rabi curvature", rabi_curvature},
        {3, "star point reproduction", star_point},
        {4, "cusp topology", cusp_topology},
        {5, "method cross-validation", method_agreement},
        {6, "logistic curve agreement", table_curves},
        {7, "robust-width ratio", width_ratio},
        {8, "property suite", property_suite},
    };
    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--criterion" && i + 1 < argc) {
            wanted.push_back(std::atoi(argv[++i]));
        } else {
            fmt::print(stderr, "usage: acceptance [--criterion N]...\n");
            return 2;
        }
    }
    int failures = 0;
    for (const Criterion& c : all) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        fmt::print("criterion {}: {} {}: {}\n", c.id, o.pass ? "PASS" : "FAIL", c.title, o.detail);
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    return failures ? 1 : 0;
}
