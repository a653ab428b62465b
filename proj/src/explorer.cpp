#include "chirpctl/explorer.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "chirpctl/errors.hpp"
#include "chirpctl/parallel.hpp"
#include "chirpctl/robustness.hpp"

namespace chirpctl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_monotone(std::span<const double> grid, const char* name) {
    if (grid.empty()) throw ConfigError(fmt::format("{} grid must be non-empty", name));
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw ConfigError(fmt::format("{} grid must be strictly increasing", name));
        }
    }
}

GridMap2D empty_map(std::string name1, std::span<const double> g1, std::string name2,
                    std::span<const double> g2) {
    GridMap2D map;
    map.axis1 = {std::move(name1), {g1.begin(), g1.end()}};
    map.axis2 = {std::move(name2), {g2.begin(), g2.end()}};
    map.values.assign(g1.size() * g2.size(), 0.0);
    map.valid.assign(g1.size() * g2.size(), 0);
    return map;
}

struct Simplex2 {
    std::array<std::array<double, 2>, 3> x;
    std::array<double, 3> f;
};

// Nelder-Mead on a 2D objective with the standard coefficients.
std::pair<std::array<double, 2>, double> nelder_mead(
    const std::function<double(const std::array<double, 2>&)>& objective,
    std::array<double, 2> start, std::array<double, 2> scale, std::size_t max_iterations) {
    Simplex2 s;
    s.x[0] = start;
    s.x[1] = {start[0] + scale[0], start[1]};
    s.x[2] = {start[0], start[1] + scale[1]};
    for (int i = 0; i < 3; ++i) s.f[i] = objective(s.x[i]);

    auto affine = [](const std::array<double, 2>& a, const std::array<double, 2>& b, double t) {
        return std::array<double, 2>{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
    };

    for (std::size_t it = 0; it < max_iterations; ++it) {
        std::array<int, 3> order{0, 1, 2};
        std::sort(order.begin(), order.end(), [&](int a, int b) { return s.f[a] < s.f[b]; });
        const Simplex2 sorted = s;
        for (int i = 0; i < 3; ++i) {
            s.x[i] = sorted.x[order[i]];
            s.f[i] = sorted.f[order[i]];
        }
        const double size = std::max(
            std::hypot((s.x[1][0] - s.x[0][0]) / scale[0], (s.x[1][1] - s.x[0][1]) / scale[1]),
            std::hypot((s.x[2][0] - s.x[0][0]) / scale[0], (s.x[2][1] - s.x[0][1]) / scale[1]));
        if (size < 1e-7 || s.f[0] < 1e-16) break;

        const std::array<double, 2> centroid{0.5 * (s.x[0][0] + s.x[1][0]),
                                             0.5 * (s.x[0][1] + s.x[1][1])};
        const auto reflected = affine(centroid, s.x[2], -1.0);
        const double fr = objective(reflected);
        if (fr < s.f[0]) {
            const auto expanded = affine(centroid, s.x[2], -2.0);
            const double fe = objective(expanded);
            if (fe < fr) {
                s.x[2] = expanded;
                s.f[2] = fe;
            } else {
                s.x[2] = reflected;
                s.f[2] = fr;
            }
            continue;
        }
        if (fr < s.f[1]) {
            s.x[2] = reflected;
            s.f[2] = fr;
            continue;
        }
        const bool outside = fr < s.f[2];
        const auto contracted = outside ? affine(centroid, reflected, 0.5)
                                        : affine(centroid, s.x[2], 0.5);
        const double fc = objective(contracted);
        if (fc < std::min(fr, s.f[2])) {
            s.x[2] = contracted;
            s.f[2] = fc;
            continue;
        }
        for (int i = 1; i < 3; ++i) {
            s.x[i] = affine(s.x[0], s.x[i], 0.5);
            s.f[i] = objective(s.x[i]);
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(s.f.begin(), s.f.end()) - s.f.begin());
    return {s.x[best], s.f[best]};
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return out;
}

}  // namespace

std::size_t GridMap2D::failed_nodes() const {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 0));
}

GridMap2D map_curvature(std::span<const double> theta_grid, std::span<const double> c2p_grid,
                        double detuning_prime, const PropagationSettings& settings,
                        unsigned workers) {
    require_monotone(theta_grid, "theta");
    require_monotone(c2p_grid, "c2_prime");
    GridMap2D map = empty_map("theta", theta_grid, "c2_prime", c2p_grid);
    map.metadata["delta_prime"] = detuning_prime;
    const std::size_t cols = c2p_grid.size();
    parallel_for(map.values.size(), workers, [&](std::size_t k) {
        const PulseSpec spec = PulseSpec::from_dimensionless(theta_grid[k / cols],
                                                             c2p_grid[k % cols], detuning_prime);
        try {
            const double g = curvature_perturbative(spec, settings);
            if (std::isfinite(g)) {
                map.values[k] = g;
                map.valid[k] = 1;
            }
        } catch (const std::exception&) {
            // masked
        }
    });
    return map;
}

GridMap2D map_pe(std::span<const double> theta_grid, std::span<const double> chirp_grid,
                 double detuning, double bandwidth, const std::optional<EnsembleModel>& ensemble,
                 const PropagationSettings& settings, unsigned workers) {
    require_monotone(theta_grid, "theta");
    require_monotone(chirp_grid, "c2");
    if (!(bandwidth > 0.0)) throw ConfigError("bandwidth must be positive");
    if (ensemble) ensemble->validate();
    GridMap2D map = empty_map("theta", theta_grid, "c2_s2", chirp_grid);
    map.metadata["delta_rad_s"] = detuning;
    map.metadata["bandwidth_rad_s"] = bandwidth;
    map.metadata["delta_prime"] = detuning / bandwidth;
    if (ensemble) map.metadata["ensemble_ratio"] = ensemble->ratio;
    const std::size_t cols = chirp_grid.size();
    parallel_for(map.values.size(), workers, [&](std::size_t k) {
        PulseSpec spec;
        spec.area = theta_grid[k / cols];
        spec.chirp = chirp_grid[k % cols];
        spec.detuning = detuning;
        spec.bandwidth = bandwidth;
        try {
            double pe = 0.0;
            bool ok = true;
            if (ensemble) {
                const EnsembleAverage avg = ensemble_average(
                    [&](double scale) {
                        PulseSpec local = spec;
                        local.area = spec.area * scale;
                        return excited_probability(propagate(local, settings).state);
                    },
                    *ensemble);
                pe = avg.value;
                ok = avg.converged;
            } else {
                pe = excited_probability(propagate(spec, settings).state);
            }
            if (ok && std::isfinite(pe)) {
                map.values[k] = pe;
                map.valid[k] = 1;
            }
        } catch (const std::exception&) {
            // masked
        }
    });
    return map;
}

void SearchBox::validate() const {
    if (!(theta_min >= 0.0 && theta_max > theta_min)) {
        throw ConfigError("search box theta range must be increasing and non-negative");
    }
    if (!(c2p_max > c2p_min)) throw ConfigError("search box c2_prime range must be increasing");
}

RobustPoint find_robust_point(double detuning_prime, const SearchBox& box,
                              std::optional<std::pair<double, double>> seed,
                              const RobustSearchOptions& options,
                              const PropagationSettings& settings, unsigned workers) {
    box.validate();
    if (options.grid_points < 3) throw ConfigError("search grid needs >= 3 points per axis");
    const std::size_t n = options.grid_points;
    const std::vector<double> thetas = linspace(box.theta_min, box.theta_max, n);
    const std::vector<double> chirps = linspace(box.c2p_min, box.c2p_max, n);

    auto curvature_at = [&](double theta, double c2p) {
        try {
            return curvature_perturbative(
                PulseSpec::from_dimensionless(theta, c2p, detuning_prime), settings);
        } catch (const std::exception&) {
            return kInf;
        }
    };

    std::vector<double> g(n * n);
    parallel_for(g.size(), workers, [&](std::size_t k) {
        g[k] = curvature_at(thetas[k / n], chirps[k % n]);
    });

    // Local minima of the coarse scan, best first.
    std::vector<std::size_t> minima;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double v = g[i * n + j];
            if (!std::isfinite(v)) continue;
            bool lowest = true;
            for (int di = -1; di <= 1 && lowest; ++di) {
                for (int dj = -1; dj <= 1; ++dj) {
                    const auto ii = static_cast<std::ptrdiff_t>(i) + di;
                    const auto jj = static_cast<std::ptrdiff_t>(j) + dj;
                    if ((di == 0 && dj == 0) || ii < 0 || jj < 0 ||
                        ii >= static_cast<std::ptrdiff_t>(n) || jj >= static_cast<std::ptrdiff_t>(n)) {
                        continue;
                    }
                    if (g[static_cast<std::size_t>(ii) * n + static_cast<std::size_t>(jj)] < v) {
                        lowest = false;
                        break;
                    }
                }
            }
            if (lowest) minima.push_back(i * n + j);
        }
    }
    std::stable_sort(minima.begin(), minima.end(),
                     [&](std::size_t a, std::size_t b) { return g[a] < g[b]; });
    if (minima.size() > options.max_candidates) minima.resize(options.max_candidates);

    std::vector<std::array<double, 2>> starts;
    if (seed) starts.push_back({seed->first / std::numbers::pi, seed->second});
    for (std::size_t k : minima) starts.push_back({thetas[k / n] / std::numbers::pi, chirps[k % n]});
    if (starts.empty()) throw ConvergenceError("robust search: no finite curvature in box", kInf, kInf);

    const std::array<double, 2> cell{(box.theta_max - box.theta_min) / std::numbers::pi /
                                         static_cast<double>(n - 1),
                                     (box.c2p_max - box.c2p_min) / static_cast<double>(n - 1)};
    auto objective = [&](const std::array<double, 2>& x) {
        const double theta = x[0] * std::numbers::pi;
        if (theta < box.theta_min || theta > box.theta_max || x[1] < box.c2p_min ||
            x[1] > box.c2p_max) {
            return kInf;
        }
        return curvature_at(theta, x[1]);
    };

    std::vector<std::pair<std::array<double, 2>, double>> refined(starts.size());
    parallel_for(starts.size(), workers, [&](std::size_t k) {
        refined[k] = nelder_mead(objective, starts[k], cell, options.max_iterations);
    });

    std::optional<std::size_t> pick;
    for (std::size_t k = 0; k < refined.size(); ++k) {
        if (!(refined[k].second < options.tolerance)) continue;
        if (!pick || refined[k].first[0] < refined[*pick].first[0]) pick = k;
    }
    bool robust = pick.has_value();
    if (!pick) {
        pick = 0;
        for (std::size_t k = 1; k < refined.size(); ++k) {
            if (refined[k].second < refined[*pick].second) pick = k;
        }
    }

    RobustPoint p;
    p.detuning_prime = detuning_prime;
    p.theta = refined[*pick].first[0] * std::numbers::pi;
    p.chirp_prime = refined[*pick].first[1];
    p.g = refined[*pick].second;
    p.robust = robust;
    p.pe = excited_probability(
        propagate(PulseSpec::from_dimensionless(p.theta, p.chirp_prime, detuning_prime), settings)
            .state);
    return p;
}

RobustLine trace_robust_line(double detuning_prime_min, double detuning_prime_max,
                             std::size_t steps, const LineOptions& options,
                             const PropagationSettings& settings, unsigned workers) {
    if (!(detuning_prime_min >= 0.05 && detuning_prime_max <= 1.5 &&
          detuning_prime_min < detuning_prime_max)) {
        throw ConfigError("robust line D' range must be increasing within [0.05, 1.5]");
    }
    if (steps < 8) throw ConfigError("robust line needs at least 8 steps");
    const std::vector<double> dps = linspace(detuning_prime_min, detuning_prime_max, steps);

    std::size_t anchor = 0;
    for (std::size_t i = 1; i < steps; ++i) {
        if (std::abs(dps[i] - options.anchor_detuning_prime) <
            std::abs(dps[anchor] - options.anchor_detuning_prime)) {
            anchor = i;
        }
    }

    RobustLine line;
    std::vector<std::optional<RobustPoint>> found(steps);
    const RobustPoint first =
        find_robust_point(dps[anchor], options.anchor_box, std::nullopt, options.search, settings,
                          workers);
    if (!first.robust) {
        line.complete = false;
        line.failure = fmt::format("no robust point at anchor D' = {:.4f} (best g = {:.3e})",
                                   dps[anchor], first.g);
        return line;
    }
    found[anchor] = first;

    auto local_box = [&](double theta, double c2p) {
        SearchBox box;
        box.theta_min = std::max(0.1 * std::numbers::pi, theta - options.step_half_theta);
        box.theta_max = theta + options.step_half_theta;
        box.c2p_min = std::max(0.0, c2p - options.step_half_c2p);
        box.c2p_max = c2p + options.step_half_c2p;
        return box;
    };
    auto step_from = [&](const RobustPoint& prev, double dp) {
        RobustPoint p = find_robust_point(dp, local_box(prev.theta, prev.chirp_prime),
                                          std::make_pair(prev.theta, prev.chirp_prime),
                                          options.search, settings, workers);
        for (int attempt = 0; attempt < options.recentre_attempts && !p.robust; ++attempt) {
            p = find_robust_point(dp, local_box(p.theta, p.chirp_prime),
                                  std::make_pair(p.theta, p.chirp_prime), options.search, settings,
                                  workers);
        }
        return p;
    };

    std::size_t lo = anchor;
    std::size_t hi = anchor;
    for (std::size_t i = anchor + 1; i < steps; ++i) {
        const RobustPoint p = step_from(*found[i - 1], dps[i]);
        if (!p.robust) {
            line.complete = false;
            line.failure = fmt::format("continuation broke at D' = {:.4f} (best g = {:.3e})", dps[i], p.g);
            break;
        }
        found[i] = p;
        hi = i;
    }
    for (std::size_t i = anchor; i-- > 0;) {
        const RobustPoint p = step_from(*found[i + 1], dps[i]);
        if (!p.robust) {
            line.complete = false;
            if (!line.failure.empty()) line.failure += "; ";
            line.failure += fmt::format("continuation broke at D' = {:.4f} (best g = {:.3e})", dps[i], p.g);
            break;
        }
        found[i] = p;
        lo = i;
    }
    for (std::size_t i = lo; i <= hi; ++i) line.points.push_back(*found[i]);
    return line;
}

double line_coordinate(const RobustPoint& p, FitVariable v) {
    switch (v) {
        case FitVariable::DetuningPrime: return p.detuning_prime;
        case FitVariable::ChirpPrime: return p.chirp_prime;
        case FitVariable::ThetaOverPi: return p.theta / std::numbers::pi;
    }
    return 0.0;
}

}  // namespace chirpctl
