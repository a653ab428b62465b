#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "chirpctl/dynamics.hpp"
#include "chirpctl/explorer.hpp"
#include "chirpctl/pulse.hpp"
#include "json.hpp"

namespace chirpctl {

struct GridSpec {
    double min = 0.0;
    double max = 1.0;
    std::size_t count = 2;

    std::vector<double> values() const;
    bool operator==(const GridSpec&) const = default;
};

// Pulse block. Dimensionless keys win over physical ones when both are set.
struct PulseConfig {
    std::optional<double> theta_pi;
    std::optional<double> c2_prime;
    std::optional<double> delta_prime;
    std::optional<double> c2_fs2;
    std::optional<double> delta_rad_s;
    std::optional<double> lambda_c_nm;
    double lambda_0_nm = kRubidiumD1Wavelength * 1e9;
    std::optional<double> bandwidth_rad_s;
    std::optional<double> bandwidth_fwhm_rad_s;
    double cep = 0.0;

    PulseSpec resolve() const;
    bool operator==(const PulseConfig&) const = default;
};

// Search box in the units the config uses (area in multiples of pi).
struct BoxConfig {
    double theta_pi_min = 1.0;
    double theta_pi_max = 3.0;
    double c2_prime_min = 1.0;
    double c2_prime_max = 4.0;

    SearchBox to_box() const;
    bool operator==(const BoxConfig&) const = default;
};

struct SweepConfig {
    GridSpec theta_pi{0.0, 3.0, 61};
    GridSpec c2_prime{0.0, 4.0, 41};
    GridSpec c2_fs2{0.0, 16000.0, 17};
    GridSpec delta_prime{0.15, 1.1, 20};
    double gamma_half_range = 0.5;
    std::size_t gamma_count = 201;
    double threshold = 0.99;
    double fd_step = 0.02;
    std::optional<EnsembleModel> ensemble;
    BoxConfig box;
    std::string fit_variable = "all";
    std::string fit_input;

    bool operator==(const SweepConfig&) const = default;
};

struct OutputConfig {
    std::string directory;
    bool trajectory = false;

    bool operator==(const OutputConfig&) const = default;
};

// One invocation. `workers` bounds parallel width only and is left out of
// manifests, so outputs do not depend on it. Zero means "use the default".
struct RunConfig {
    std::string command;
    std::string figure;
    PulseConfig pulse;
    PropagationSettings propagation;
    SweepConfig sweep;
    OutputConfig output;
    unsigned workers = 0;

    // Equality ignoring `workers`.
    bool equivalent(const RunConfig& other) const;
};

bool operator==(const EnsembleModel& a, const EnsembleModel& b);
bool operator==(const SearchBox& a, const SearchBox& b);
bool operator==(const PropagationSettings& a, const PropagationSettings& b);

// Throws ConfigError naming the offending key.
RunConfig parse_config(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);

}  // namespace chirpctl
