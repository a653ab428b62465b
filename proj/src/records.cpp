#include "chirpctl/records.hpp"

#include <fmt/format.h>

#include <numbers>
#include <cstdlib>
#include <ostream>
#include <thread>

#include "chirpctl/parallel.hpp"

namespace chirpctl {

unsigned default_workers() {
    if (const char* env = std::getenv("CHIRPCTL_WORKERS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return static_cast<unsigned>(n);
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void to_json(nlohmann::json& j, const PulseSpec& spec) {
    j = {{"theta_pi", spec.area / std::numbers::pi},
         {"c2_prime", spec.chirp_prime()},
         {"delta_prime", spec.detuning_prime()},
         {"cep", spec.cep},
         {"bandwidth_rad_s", spec.bandwidth},
         {"c2_fs2", spec.chirp * 1e30},
         {"delta_rad_s", spec.detuning}};
}

void to_json(nlohmann::json& j, const RobustnessReport& report) {
    j = {{"g_fd", report.g_fd},
         {"g_pert", report.g_pert},
         {"width", report.width},
         {"threshold", report.threshold},
         {"width_exceeds_grid", report.width_exceeds_grid},
         {"fd_noisy", report.fd_noisy}};
}

void to_json(nlohmann::json& j, const RobustPoint& point) {
    j = {{"delta_prime", point.detuning_prime},
         {"c2_prime", point.chirp_prime},
         {"theta_pi", point.theta / std::numbers::pi},
         {"g", point.g},
         {"pe", point.pe},
         {"robust", point.robust}};
}

void to_json(nlohmann::json& j, const RobustLine& line) {
    j = {{"points", line.points}, {"complete", line.complete}, {"failure", line.failure}};
}

void to_json(nlohmann::json& j, const LogisticFit& fit) {
    j = {{"variable", std::string(to_string(fit.variable))},
         {"A", fit.a},
         {"B", fit.b},
         {"C", fit.c},
         {"D", fit.d},
         {"residual_rms", fit.residual_rms}};
}

void to_json(nlohmann::json& j, const CuspReport& report) {
    j = {{"theta_star_pi", report.theta_star / std::numbers::pi},
         {"min_speed", report.min_speed},
         {"classification", std::string(to_string(report.classification))},
         {"loop_detected", report.loop_detected}};
}

void to_json(nlohmann::json& j, const GridMap2D& map) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < map.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t k = 0; k < map.cols(); ++k) {
            if (map.is_valid(i, k)) {
                row.push_back(map.at(i, k));
            } else {
                row.push_back(nullptr);
            }
        }
        rows.push_back(std::move(row));
    }
    j = {{"axis1", {{"name", map.axis1.name}, {"samples", map.axis1.samples}}},
         {"axis2", {{"name", map.axis2.name}, {"samples", map.axis2.samples}}},
         {"values", std::move(rows)},
         {"failed_nodes", map.failed_nodes()},
         {"metadata", map.metadata}};
}

void write_fidelity_curve(std::ostream& os, const FidelityCurve& curve) {
    os << "gamma,fidelity\n";
    for (std::size_t i = 0; i < curve.gammas.size(); ++i) {
        os << fmt::format("{:.8f},{:.15f}\n", curve.gammas[i], curve.fidelities[i]);
    }
}

void write_grid(std::ostream& os, const GridMap2D& map) {
    os << map.axis1.name << '\\' << map.axis2.name;
    for (double v : map.axis2.samples) os << fmt::format(",{:.10e}", v);
    os << '\n';
    for (std::size_t i = 0; i < map.rows(); ++i) {
        os << fmt::format("{:.10e}", map.axis1.samples[i]);
        for (std::size_t k = 0; k < map.cols(); ++k) {
            if (map.is_valid(i, k)) {
                os << fmt::format(",{:.10e}", map.at(i, k));
            } else {
                os << ",nan";
            }
        }
        os << '\n';
    }
}

void write_robust_line(std::ostream& os, const RobustLine& line) {
    os << "delta_prime,c2_prime,theta_over_pi,pe,g\n";
    for (const RobustPoint& p : line.points) {
        os << fmt::format("{:.8f},{:.10f},{:.10f},{:.10f},{:.6e}\n", p.detuning_prime,
                          p.chirp_prime, p.theta / std::numbers::pi, p.pe, p.g);
    }
}

}  // namespace chirpctl
