#pragma once

#include <cstddef>
#include <iosfwd>
#include <numbers>
#include <string_view>
#include <vector>

#include "chirpctl/dynamics.hpp"

namespace chirpctl {

// Final Bloch vectors as a function of pulse area at fixed (c2', D', phi).
struct ThetaTrajectory {
    std::vector<double> thetas;
    std::vector<BlochVector> points;
    double chirp_prime = 0.0;
    double detuning_prime = 0.0;
    double cep = 0.0;
};

enum class Topology { Looped, Cusp, Unlooped, Ambiguous };

std::string_view to_string(Topology t);

struct CuspOptions {
    double speed_tolerance = 1e-2;  // per unit Theta/pi
    int refinement_levels = 3;
    int refinement_factor = 4;
    double loop_half_window = 0.9 * std::numbers::pi;
    std::size_t loop_samples = 241;
};

struct CuspReport {
    double theta_star = 0.0;
    double min_speed = 0.0;  // |dr/dTheta| per unit Theta/pi
    Topology classification = Topology::Unlooped;
    bool loop_detected = false;
};

inline constexpr std::size_t kMinTrajectorySamples = 64;
inline constexpr double kMaxTrajectoryArea = 6.0 * std::numbers::pi;

// n equally spaced areas over [theta_min, theta_max].
ThetaTrajectory theta_trajectory(double chirp_prime, double detuning_prime, double theta_min,
                                 double theta_max, std::size_t n,
                                 const PropagationSettings& settings = {}, double cep = 0.0,
                                 unsigned workers = 1);

// |dr/dTheta| per radian of area; central differences inside, one-sided at
// the ends.
std::vector<double> endpoint_speed(const ThetaTrajectory& traj);

// Locates the slowest point (refining locally around it), then classifies
// the curve there as cusp, looped (self-intersecting when projected onto the
// sphere's tangent plane at that point) or unlooped. Readings within 10% of the speed tolerance are reported
// as ambiguous.
CuspReport classify_topology(const ThetaTrajectory& traj, const CuspOptions& options = {},
                             const PropagationSettings& settings = {}, unsigned workers = 1);

// True when the polyline, projected onto the plane orthogonal to `normal`,
// crosses itself.
bool projected_self_intersection(const std::vector<BlochVector>& points, const BlochVector& normal);

// Rows: theta_over_pi, x, y, z, speed (per unit Theta/pi).
void write_theta_trajectory(std::ostream& os, const ThetaTrajectory& traj);

}  // namespace chirpctl
