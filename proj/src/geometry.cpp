#include "chirpctl/geometry.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <ostream>

#include "chirpctl/errors.hpp"
#include "chirpctl/parallel.hpp"

namespace chirpctl {

namespace {

using Vec2 = Eigen::Vector2d;

ThetaTrajectory sample_trajectory(double chirp_prime, double detuning_prime,
                                  std::vector<double> thetas, const PropagationSettings& settings,
                                  double cep, unsigned workers) {
    ThetaTrajectory traj;
    traj.chirp_prime = chirp_prime;
    traj.detuning_prime = detuning_prime;
    traj.cep = cep;
    traj.points.resize(thetas.size());
    parallel_for(thetas.size(), workers, [&](std::size_t i) {
        const PulseSpec spec =
            PulseSpec::from_dimensionless(thetas[i], chirp_prime, detuning_prime, 1.0, cep);
        try {
            traj.points[i] = bloch_coordinates(propagate(spec, settings).state);
        } catch (const std::exception& e) {
            throw std::runtime_error(
                fmt::format("trajectory failed at Theta = {:.6f} pi: {}", thetas[i] / std::numbers::pi,
                            e.what()));
        }
    });
    traj.thetas = std::move(thetas);
    return traj;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return out;
}

std::size_t argmin(const std::vector<double>& v) {
    return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

constexpr double kFacingCosine = 0.2;

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_cross(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
    const double d1 = cross2(q2 - q1, p1 - q1);
    const double d2 = cross2(q2 - q1, p2 - q1);
    const double d3 = cross2(p2 - p1, q1 - p1);
    const double d4 = cross2(p2 - p1, q2 - p1);
    return ((d1 > 0.0) != (d2 > 0.0)) && ((d3 > 0.0) != (d4 > 0.0)) && d1 != 0.0 && d2 != 0.0 &&
           d3 != 0.0 && d4 != 0.0;
}

}  // namespace

std::string_view to_string(Topology t) {
    switch (t) {
        case Topology::Looped: return "looped";
        case Topology::Cusp: return "cusp";
        case Topology::Unlooped: return "unlooped";
        case Topology::Ambiguous: return "ambiguous";
    }
    return "unknown";
}

ThetaTrajectory theta_trajectory(double chirp_prime, double detuning_prime, double theta_min,
                                 double theta_max, std::size_t n,
                                 const PropagationSettings& settings, double cep,
                                 unsigned workers) {
    if (n < kMinTrajectorySamples) throw ConfigError("trajectory needs at least 64 samples");
    if (!(theta_min >= 0.0 && theta_max <= kMaxTrajectoryArea * (1.0 + 1e-12) &&
          theta_min < theta_max)) {
        throw ConfigError("trajectory area range must be increasing within [0, 6 pi]");
    }
    return sample_trajectory(chirp_prime, detuning_prime, linspace(theta_min, theta_max, n),
                             settings, cep, workers);
}

std::vector<double> endpoint_speed(const ThetaTrajectory& traj) {
    const std::size_t n = traj.points.size();
    if (n < 3) throw ConfigError("speed needs at least 3 trajectory samples");
    std::vector<double> speed(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        speed[i] = (traj.points[i + 1] - traj.points[i - 1]).norm() /
                   (traj.thetas[i + 1] - traj.thetas[i - 1]);
    }
    speed.front() = (traj.points[1] - traj.points[0]).norm() / (traj.thetas[1] - traj.thetas[0]);
    speed.back() = (traj.points[n - 1] - traj.points[n - 2]).norm() /
                   (traj.thetas[n - 1] - traj.thetas[n - 2]);
    return speed;
}

bool projected_self_intersection(const std::vector<BlochVector>& points,
                                 const BlochVector& normal) {
    const std::size_t n = points.size();
    if (n < 4) return false;
    const BlochVector axis = normal.normalized();
    BlochVector e1 = axis.cross(BlochVector::UnitZ());
    if (e1.norm() < 1e-6) e1 = axis.cross(BlochVector::UnitX());
    e1.normalize();
    const BlochVector e2 = axis.cross(e1);
    std::vector<Vec2> flat(n);
    for (std::size_t i = 0; i < n; ++i) flat[i] = Vec2(points[i].dot(e1), points[i].dot(e2));
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = i + 2; j + 1 < n; ++j) {
            if (segments_cross(flat[i], flat[i + 1], flat[j], flat[j + 1])) return true;
        }
    }
    return false;
}

CuspReport classify_topology(const ThetaTrajectory& traj, const CuspOptions& options,
                             const PropagationSettings& settings, unsigned workers) {
    const std::vector<double> speed = endpoint_speed(traj);
    std::size_t best = argmin(speed);
    double centre = traj.thetas[best];
    double spacing = traj.thetas[1] - traj.thetas[0];
    double min_speed = speed[best];

    const double lo_limit = traj.thetas.front();
    const double hi_limit = traj.thetas.back();
    for (int level = 0; level < options.refinement_levels; ++level) {
        const double lo = std::max(lo_limit, centre - 2.0 * spacing);
        const double hi = std::min(hi_limit, centre + 2.0 * spacing);
        const double fine = spacing / options.refinement_factor;
        const auto count = static_cast<std::size_t>(std::lround((hi - lo) / fine)) + 1;
        if (count < 3) break;
        const ThetaTrajectory local =
            sample_trajectory(traj.chirp_prime, traj.detuning_prime, linspace(lo, hi, count),
                              settings, traj.cep, workers);
        const std::vector<double> local_speed = endpoint_speed(local);
        best = argmin(local_speed);
        centre = local.thetas[best];
        min_speed = local_speed[best];
        spacing = fine;
    }

    CuspReport report;
    report.theta_star = centre;
    report.min_speed = std::numbers::pi * min_speed;

    // The loop window is sampled afresh and may reach beyond the input range.
    const double lo = std::max(0.0, centre - options.loop_half_window);
    const double hi = std::min(kMaxTrajectoryArea, centre + options.loop_half_window);
    const ThetaTrajectory window =
        sample_trajectory(traj.chirp_prime, traj.detuning_prime,
                          linspace(lo, hi, options.loop_samples), settings, traj.cep, workers);
    // Keep the contiguous run facing the tangent point so the projection is one-to-one.
    const BlochVector tangent_point =
        sample_trajectory(traj.chirp_prime, traj.detuning_prime, {centre}, settings, traj.cep, 1)
            .points.front();
    const std::size_t mid = static_cast<std::size_t>(
        std::min_element(window.thetas.begin(), window.thetas.end(),
                         [&](double a, double b) { return std::abs(a - centre) < std::abs(b - centre); }) -
        window.thetas.begin());
    std::size_t first = mid;
    std::size_t last = mid;
    while (first > 0 && window.points[first - 1].dot(tangent_point) > kFacingCosine) --first;
    while (last + 1 < window.points.size() && window.points[last + 1].dot(tangent_point) > kFacingCosine) ++last;
    const std::vector<BlochVector> facing(window.points.begin() + static_cast<std::ptrdiff_t>(first),
                                          window.points.begin() + static_cast<std::ptrdiff_t>(last) + 1);
    report.loop_detected = projected_self_intersection(facing, tangent_point);

    const double tol = options.speed_tolerance;
    if (std::abs(report.min_speed - tol) < 0.1 * tol) {
        report.classification = Topology::Ambiguous;
    } else if (report.min_speed < tol) {
        report.classification = Topology::Cusp;
    } else if (report.loop_detected) {
        report.classification = Topology::Looped;
    } else {
        report.classification = Topology::Unlooped;
    }
    return report;
}

void write_theta_trajectory(std::ostream& os, const ThetaTrajectory& traj) {
    const std::vector<double> speed = endpoint_speed(traj);
    os << "theta_over_pi,x,y,z,speed\n";
    for (std::size_t i = 0; i < traj.thetas.size(); ++i) {
        const BlochVector& r = traj.points[i];
        os << fmt::format("{:.10f},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                          traj.thetas[i] / std::numbers::pi, r.x(), r.y(), r.z(),
                          std::numbers::pi * speed[i]);
    }
}

}  // namespace chirpctl
