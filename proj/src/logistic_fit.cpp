#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "chirpctl/errors.hpp"
#include "chirpctl/explorer.hpp"

namespace chirpctl {

namespace {

// Parameters (A, B, ln C, D); C stays positive by construction.
using Params = Eigen::Vector4d;

LogisticFit to_fit(const Params& p, FitVariable v) {
    LogisticFit fit;
    fit.a = p(0);
    fit.b = p(1);
    fit.c = std::exp(p(2));
    fit.d = p(3);
    fit.variable = v;
    return fit;
}

double rms(const Eigen::VectorXd& r) { return std::sqrt(r.squaredNorm() / static_cast<double>(r.size())); }

void residuals(const Params& p, std::span<const double> xs, std::span<const double> ys,
               Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    const auto n = static_cast<Eigen::Index>(xs.size());
    r.resize(n);
    if (jac) jac->resize(n, 4);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = xs[static_cast<std::size_t>(i)];
        const double q = std::exp(p(2) - p(3) * x);
        const double l = 1.0 / (1.0 + q);
        r(i) = p(0) + p(1) * l - ys[static_cast<std::size_t>(i)];
        if (jac) {
            (*jac)(i, 0) = 1.0;
            (*jac)(i, 1) = l;
            (*jac)(i, 2) = -p(1) * q * l * l;
            (*jac)(i, 3) = p(1) * q * x * l * l;
        }
    }
}

}  // namespace

std::string_view to_string(FitVariable v) {
    switch (v) {
        case FitVariable::DetuningPrime: return "delta_prime";
        case FitVariable::ChirpPrime: return "c2_prime";
        case FitVariable::ThetaOverPi: return "theta_over_pi";
    }
    return "unknown";
}

FitVariable fit_variable_from_string(std::string_view name) {
    if (name == "delta_prime") return FitVariable::DetuningPrime;
    if (name == "c2_prime") return FitVariable::ChirpPrime;
    if (name == "theta_over_pi") return FitVariable::ThetaOverPi;
    throw ConfigError("fit variable must be one of delta_prime, c2_prime, theta_over_pi");
}

double LogisticFit::operator()(double x) const { return a + b / (1.0 + c * std::exp(-d * x)); }

LogisticFit fit_logistic(std::span<const double> xs, std::span<const double> pes,
                         FitVariable variable) {
    if (xs.size() != pes.size()) throw ConfigError("fit needs matching x and P_e samples");
    if (xs.size() < 6) throw ConfigError("fit needs at least 6 samples");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i])) throw ConfigError("fit x samples must be finite");
        if (!(pes[i] >= kFitPeMin - 1e-9 && pes[i] <= kFitPeMax + 1e-9)) {
            throw ConfigError("fit P_e samples must lie in [0.08, 0.98]");
        }
    }

    // Deterministic start: plateaus from the extremes, slope from the steepest
    // secant, centre from the mid-level crossing.
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    const auto [lo_it, hi_it] = std::minmax_element(pes.begin(), pes.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (hi - lo < 1e-9) throw FitError("degenerate fit: P_e samples are constant", LogisticFit{});

    double steepest = 0.0;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const double dx = xs[order[k + 1]] - xs[order[k]];
        if (dx <= 0.0) continue;
        const double slope = (pes[order[k + 1]] - pes[order[k]]) / dx;
        if (std::abs(slope) > std::abs(steepest)) steepest = slope;
    }
    if (steepest == 0.0) throw FitError("degenerate fit: no x spread", LogisticFit{});

    Params p;
    p(0) = lo;
    p(1) = hi - lo;
    p(3) = 4.0 * steepest / p(1);
    const double mid = lo + 0.5 * (hi - lo);
    double x_mid = xs[order[order.size() / 2]];
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const double y0 = pes[order[k]] - mid;
        const double y1 = pes[order[k + 1]] - mid;
        if (y0 == 0.0 || (y0 < 0.0) != (y1 < 0.0)) {
            x_mid = xs[order[k]] + (xs[order[k + 1]] - xs[order[k]]) * (y0 / (y0 - y1));
            break;
        }
    }
    p(2) = p(3) * x_mid;

    Eigen::VectorXd r, r_trial;
    Eigen::MatrixXd jac;
    residuals(p, xs, pes, r, &jac);
    double cost = r.squaredNorm();
    double lambda = 1e-3;
    constexpr std::size_t kMaxIterations = 500;
    std::size_t it = 0;
    bool converged = false;
    for (; it < kMaxIterations; ++it) {
        const Eigen::Matrix4d jtj = jac.transpose() * jac;
        const Eigen::Vector4d grad = jac.transpose() * r;
        if (grad.lpNorm<Eigen::Infinity>() < 1e-15) {
            converged = true;
            break;
        }
        bool accepted = false;
        while (lambda < 1e12) {
            Eigen::Matrix4d damped = jtj;
            for (int k = 0; k < 4; ++k) damped(k, k) += lambda * std::max(jtj(k, k), 1e-12);
            const Eigen::Vector4d step = damped.ldlt().solve(-grad);
            const Params trial = p + step;
            residuals(trial, xs, pes, r_trial, nullptr);
            const double trial_cost = r_trial.squaredNorm();
            if (std::isfinite(trial_cost) && trial_cost <= cost) {
                const double rel = step.norm() / (p.norm() + 1e-12);
                p = trial;
                const double drop = cost - trial_cost;
                cost = trial_cost;
                lambda = std::max(lambda / 10.0, 1e-15);
                accepted = true;
                if (rel < 1e-14 || drop <= 1e-30 * (1.0 + cost)) converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            // No downhill step at any damping: stationary to working precision.
            converged = true;
            break;
        }
        residuals(p, xs, pes, r, &jac);
        if (converged) break;
    }

    LogisticFit fit = to_fit(p, variable);
    fit.residual_rms = rms(r);
    fit.iterations = it;
    if (!converged || !std::isfinite(fit.residual_rms)) {
        throw FitError("logistic fit did not converge", fit);
    }
    if (std::abs(fit.d) < 1e-12) throw FitError("degenerate fit: zero slope", fit);
    return fit;
}

}  // namespace chirpctl
