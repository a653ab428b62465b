#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chirpctl/dynamics.hpp"

namespace chirpctl {

struct Axis {
    std::string name;
    std::vector<double> samples;
};

// Row-major over axis1 (outer) x axis2 (inner). Nodes whose propagation
// failed are kept at 0 with valid[i] == 0; they are never interpolated.
struct GridMap2D {
    Axis axis1;
    Axis axis2;
    std::vector<double> values;
    std::vector<char> valid;
    std::map<std::string, double> metadata;

    std::size_t rows() const { return axis1.samples.size(); }
    std::size_t cols() const { return axis2.samples.size(); }
    double at(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }
    bool is_valid(std::size_t i, std::size_t j) const { return valid[i * cols() + j] != 0; }
    std::size_t failed_nodes() const;
};

// g(Theta, c2') from the perturbative curvature at fixed D'.
GridMap2D map_curvature(std::span<const double> theta_grid, std::span<const double> c2p_grid,
                        double detuning_prime, const PropagationSettings& settings = {},
                        unsigned workers = 1);

// Which Gaussian width of the beam the cloud/beam diameter ratio refers to.
enum class BeamProfile {
    Field,      // cloud density width over field-amplitude width
    Intensity,  // cloud density width over intensity width (field is sqrt(2) wider)
};

struct EnsembleModel {
    double ratio = 0.47;
    BeamProfile profile = BeamProfile::Field;
    std::size_t radial_samples = 48;
    bool verify = true;  // re-evaluate with doubled samples and flag drift > 1e-4

    void validate() const;
};

struct EnsembleAverage {
    double value = 0.0;
    double doubled = 0.0;  // value at 2x samples; equals value when verify is off
    bool converged = true;
};

// <P> = Int n(r) P(s(r)) 2 pi r dr / Int n(r) 2 pi r dr, with s(r) the local
// peak-Rabi scale exp(-r^2/w^2) and n(r) the cloud density. Evaluated by
// Gauss-Laguerre quadrature in u = r^2 / r_cloud^2.
EnsembleAverage ensemble_average(const std::function<double(double)>& pe_of_scale,
                                 const EnsembleModel& model);

// Gauss-Laguerre nodes and weights (weight e^-u on [0, inf)).
std::pair<std::vector<double>, std::vector<double>> gauss_laguerre(std::size_t n);

// P_e(Theta, c2) in physical chirp units [s^2] at fixed detuning [rad/s] and
// bandwidth [rad/s]; optionally averaged over the cloud.
GridMap2D map_pe(std::span<const double> theta_grid, std::span<const double> chirp_grid,
                 double detuning, double bandwidth,
                 const std::optional<EnsembleModel>& ensemble = std::nullopt,
                 const PropagationSettings& settings = {}, unsigned workers = 1);

struct SearchBox {
    double theta_min = 0.0;
    double theta_max = 0.0;
    double c2p_min = 0.0;
    double c2p_max = 0.0;

    void validate() const;
};

struct RobustSearchOptions {
    std::size_t grid_points = 21;  // per axis of the coarse scan
    double tolerance = 1e-6;       // g below this counts as robust
    std::size_t max_candidates = 6;
    std::size_t max_iterations = 300;
};

struct RobustPoint {
    double detuning_prime = 0.0;
    double chirp_prime = 0.0;
    double theta = 0.0;
    double g = 0.0;
    double pe = 0.0;
    bool robust = false;
};

// Coarse scan of g over the box, Nelder-Mead refinement of the best local
// minima, then the robust minimum with the smallest area.
RobustPoint find_robust_point(double detuning_prime, const SearchBox& box,
                              std::optional<std::pair<double, double>> seed = std::nullopt,
                              const RobustSearchOptions& options = {},
                              const PropagationSettings& settings = {}, unsigned workers = 1);

struct LineOptions {
    SearchBox anchor_box{std::numbers::pi, 3.0 * std::numbers::pi, 1.0, 4.0};
    double anchor_detuning_prime = 0.637;
    double step_half_theta = 0.25 * std::numbers::pi;  // local box around the previous point
    double step_half_c2p = 0.75;
    int recentre_attempts = 3;  // re-centre the local box when the optimum sits on its edge
    RobustSearchOptions search{};
};

struct RobustLine {
    std::vector<RobustPoint> points;  // increasing D'
    bool complete = true;
    std::string failure;
};

// Continuation along D': the grid point nearest the anchor is found in the
// anchor box, then every neighbour is searched in a small box seeded from
// the previous point, outwards in both directions.
RobustLine trace_robust_line(double detuning_prime_min, double detuning_prime_max,
                             std::size_t steps, const LineOptions& options = {},
                             const PropagationSettings& settings = {}, unsigned workers = 1);

enum class FitVariable { DetuningPrime, ChirpPrime, ThetaOverPi };

std::string_view to_string(FitVariable v);
FitVariable fit_variable_from_string(std::string_view name);

// P_e = A + B / (1 + C exp(-D x)).
struct LogisticFit {
    double a = 0.0;
    double b = 0.0;
    double c = 1.0;
    double d = 0.0;
    FitVariable variable = FitVariable::DetuningPrime;
    double residual_rms = 0.0;
    std::size_t iterations = 0;

    double operator()(double x) const;
};

class FitError : public std::runtime_error {
public:
    FitError(const std::string& what, LogisticFit best)
        : std::runtime_error(what), best_(best) {}
    const LogisticFit& best() const noexcept { return best_; }

private:
    LogisticFit best_;
};

inline constexpr double kFitPeMin = 0.08;
inline constexpr double kFitPeMax = 0.98;

// Levenberg-Marquardt from a deterministic initializer.
LogisticFit fit_logistic(std::span<const double> xs, std::span<const double> pes,
                         FitVariable variable);

// Line coordinate for the given fit variable.
double line_coordinate(const RobustPoint& p, FitVariable v);

}  // namespace chirpctl
