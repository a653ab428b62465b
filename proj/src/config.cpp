#include "chirpctl/config.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

#include "chirpctl/errors.hpp"

namespace chirpctl {

namespace {

using nlohmann::json;

double number(const json& j, const std::string& key) {
    if (!j.is_number()) throw ConfigError(fmt::format("{} must be a number", key));
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(fmt::format("{} must be finite", key));
    return v;
}

void read(const json& obj, const char* key, double& out, const std::string& prefix) {
    if (obj.contains(key)) out = number(obj.at(key), prefix + key);
}

void read(const json& obj, const char* key, std::optional<double>& out, const std::string& prefix) {
    if (obj.contains(key) && !obj.at(key).is_null()) out = number(obj.at(key), prefix + key);
}

void read(const json& obj, const char* key, std::size_t& out, const std::string& prefix) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError(fmt::format("{}{} must be a non-negative integer", prefix, key));
    }
    out = v.get<std::size_t>();
}

void read(const json& obj, const char* key, std::string& out, const std::string& prefix) {
    if (!obj.contains(key)) return;
    if (!obj.at(key).is_string()) throw ConfigError(fmt::format("{}{} must be a string", prefix, key));
    out = obj.at(key).get<std::string>();
}

void read(const json& obj, const char* key, bool& out, const std::string& prefix) {
    if (!obj.contains(key)) return;
    if (!obj.at(key).is_boolean()) throw ConfigError(fmt::format("{}{} must be a boolean", prefix, key));
    out = obj.at(key).get<bool>();
}

const json& block(const json& j, const char* key) {
    static const json empty = json::object();
    if (!j.contains(key)) return empty;
    if (!j.at(key).is_object()) throw ConfigError(fmt::format("{} must be an object", key));
    return j.at(key);
}

GridSpec read_grid(const json& obj, const char* key, GridSpec fallback, const std::string& prefix) {
    if (!obj.contains(key)) return fallback;
    const json& g = obj.at(key);
    const std::string path = prefix + key + ".";
    if (!g.is_object()) throw ConfigError(fmt::format("{}{} must be an object", prefix, key));
    read(g, "min", fallback.min, path);
    read(g, "max", fallback.max, path);
    read(g, "count", fallback.count, path);
    if (fallback.count == 0) throw ConfigError(fmt::format("{}count must be positive", path));
    if (fallback.count > 1 && !(fallback.max > fallback.min)) {
        throw ConfigError(fmt::format("{}max must exceed min", path));
    }
    return fallback;
}

json grid_json(const GridSpec& g) { return {{"min", g.min}, {"max", g.max}, {"count", g.count}}; }

template <class T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

std::vector<double> GridSpec::values() const {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = count == 1 ? min
                            : min + (max - min) * static_cast<double>(i) /
                                        static_cast<double>(count - 1);
    }
    return out;
}

PulseSpec PulseConfig::resolve() const {
    PulseSpec spec;
    if (bandwidth_rad_s) {
        spec.bandwidth = *bandwidth_rad_s;
    } else if (bandwidth_fwhm_rad_s) {
        spec.bandwidth = bandwidth_from_fwhm(*bandwidth_fwhm_rad_s);
    }
    if (!(spec.bandwidth > 0.0)) throw ConfigError("pulse.bandwidth_rad_s must be positive");
    spec.area = theta_pi.value_or(0.0) * std::numbers::pi;
    if (spec.area < 0.0) throw ConfigError("pulse.theta_pi must be non-negative");
    if (c2_prime) {
        spec.chirp = *c2_prime / (spec.bandwidth * spec.bandwidth);
    } else if (c2_fs2) {
        spec.chirp = *c2_fs2 * 1e-30;
    }
    if (delta_prime) {
        spec.detuning = *delta_prime * spec.bandwidth;
    } else if (delta_rad_s) {
        spec.detuning = *delta_rad_s;
    } else if (lambda_c_nm) {
        spec.detuning = wavelength_detuning(*lambda_c_nm * 1e-9, lambda_0_nm * 1e-9);
    }
    spec.cep = cep;
    spec.validate();
    return spec;
}

bool operator==(const EnsembleModel& a, const EnsembleModel& b) {
    return a.ratio == b.ratio && a.profile == b.profile && a.radial_samples == b.radial_samples &&
           a.verify == b.verify;
}

SearchBox BoxConfig::to_box() const {
    return {theta_pi_min * std::numbers::pi, theta_pi_max * std::numbers::pi, c2_prime_min, c2_prime_max};
}

bool operator==(const SearchBox& a, const SearchBox& b) {
    return a.theta_min == b.theta_min && a.theta_max == b.theta_max && a.c2p_min == b.c2p_min &&
           a.c2p_max == b.c2p_max;
}

bool operator==(const PropagationSettings& a, const PropagationSettings& b) {
    return a.time_span_factor == b.time_span_factor &&
           a.steps_per_rabi_cycle == b.steps_per_rabi_cycle && a.frame == b.frame;
}

bool RunConfig::equivalent(const RunConfig& o) const {
    return command == o.command && figure == o.figure && pulse == o.pulse &&
           propagation == o.propagation && sweep == o.sweep && output == o.output;
}

RunConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig cfg;
    read(j, "command", cfg.command, "");
    read(j, "figure", cfg.figure, "");
    if (j.contains("workers")) {
        std::size_t w = 1;
        read(j, "workers", w, "");
        if (w == 0) throw ConfigError("workers must be positive");
        cfg.workers = static_cast<unsigned>(w);
    }

    const json& p = block(j, "pulse");
    const std::string pp = "pulse.";
    read(p, "theta_pi", cfg.pulse.theta_pi, pp);
    read(p, "c2_prime", cfg.pulse.c2_prime, pp);
    read(p, "delta_prime", cfg.pulse.delta_prime, pp);
    read(p, "c2_fs2", cfg.pulse.c2_fs2, pp);
    read(p, "delta_rad_s", cfg.pulse.delta_rad_s, pp);
    read(p, "lambda_c_nm", cfg.pulse.lambda_c_nm, pp);
    read(p, "lambda_0_nm", cfg.pulse.lambda_0_nm, pp);
    read(p, "bandwidth_rad_s", cfg.pulse.bandwidth_rad_s, pp);
    read(p, "bandwidth_fwhm_rad_s", cfg.pulse.bandwidth_fwhm_rad_s, pp);
    read(p, "cep", cfg.pulse.cep, pp);
    if (cfg.pulse.bandwidth_rad_s && !(*cfg.pulse.bandwidth_rad_s > 0.0)) {
        throw ConfigError("pulse.bandwidth_rad_s must be positive");
    }
    if (cfg.pulse.bandwidth_fwhm_rad_s && !(*cfg.pulse.bandwidth_fwhm_rad_s > 0.0)) {
        throw ConfigError("pulse.bandwidth_fwhm_rad_s must be positive");
    }
    if (cfg.pulse.theta_pi && *cfg.pulse.theta_pi < 0.0) {
        throw ConfigError("pulse.theta_pi must be non-negative");
    }

    const json& prop = block(j, "propagation");
    read(prop, "time_span_factor", cfg.propagation.time_span_factor, "propagation.");
    read(prop, "steps_per_rabi_cycle", cfg.propagation.steps_per_rabi_cycle, "propagation.");
    if (prop.contains("frame")) {
        std::string frame;
        read(prop, "frame", frame, "propagation.");
        if (frame == "diagonal") {
            cfg.propagation.frame = Frame::DiagonalDetuning;
        } else if (frame == "phase") {
            cfg.propagation.frame = Frame::PhaseOnCoupling;
        } else {
            throw ConfigError("propagation.frame must be 'diagonal' or 'phase'");
        }
    }
    try {
        cfg.propagation.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("propagation.") + e.what());
    }

    const json& s = block(j, "sweep");
    const std::string sp = "sweep.";
    cfg.sweep.theta_pi = read_grid(s, "theta_pi", cfg.sweep.theta_pi, sp);
    cfg.sweep.c2_prime = read_grid(s, "c2_prime", cfg.sweep.c2_prime, sp);
    cfg.sweep.c2_fs2 = read_grid(s, "c2_fs2", cfg.sweep.c2_fs2, sp);
    cfg.sweep.delta_prime = read_grid(s, "delta_prime", cfg.sweep.delta_prime, sp);
    read(s, "gamma_half_range", cfg.sweep.gamma_half_range, sp);
    read(s, "gamma_count", cfg.sweep.gamma_count, sp);
    read(s, "threshold", cfg.sweep.threshold, sp);
    read(s, "fd_step", cfg.sweep.fd_step, sp);
    read(s, "fit_variable", cfg.sweep.fit_variable, sp);
    read(s, "fit_input", cfg.sweep.fit_input, sp);
    if (s.contains("ensemble") && !s.at("ensemble").is_null()) {
        const json& e = s.at("ensemble");
        if (!e.is_object()) throw ConfigError("sweep.ensemble must be an object or null");
        EnsembleModel model;
        read(e, "ratio", model.ratio, "sweep.ensemble.");
        read(e, "radial_samples", model.radial_samples, "sweep.ensemble.");
        read(e, "verify", model.verify, "sweep.ensemble.");
        if (e.contains("profile")) {
            std::string profile;
            read(e, "profile", profile, "sweep.ensemble.");
            if (profile == "field") {
                model.profile = BeamProfile::Field;
            } else if (profile == "intensity") {
                model.profile = BeamProfile::Intensity;
            } else {
                throw ConfigError("sweep.ensemble.profile must be 'field' or 'intensity'");
            }
        }
        try {
            model.validate();
        } catch (const ConfigError& err) {
            throw ConfigError(std::string("sweep.") + err.what());
        }
        cfg.sweep.ensemble = model;
    }
    if (s.contains("box")) {
        const json& b = s.at("box");
        if (!b.is_object()) throw ConfigError("sweep.box must be an object");
        read(b, "theta_pi_min", cfg.sweep.box.theta_pi_min, "sweep.box.");
        read(b, "theta_pi_max", cfg.sweep.box.theta_pi_max, "sweep.box.");
        read(b, "c2_prime_min", cfg.sweep.box.c2_prime_min, "sweep.box.");
        read(b, "c2_prime_max", cfg.sweep.box.c2_prime_max, "sweep.box.");
        try {
            cfg.sweep.box.to_box().validate();
        } catch (const ConfigError& err) {
            throw ConfigError(std::string("sweep.box: ") + err.what());
        }
    }
    if (!(cfg.sweep.threshold > 0.0 && cfg.sweep.threshold < 1.0)) {
        throw ConfigError("sweep.threshold must lie in (0, 1)");
    }

    const json& o = block(j, "output");
    read(o, "directory", cfg.output.directory, "output.");
    read(o, "trajectory", cfg.output.trajectory, "output.");
    return cfg;
}

nlohmann::json config_to_json(const RunConfig& cfg) {
    json pulse = {{"theta_pi", optional_json(cfg.pulse.theta_pi)},
                  {"c2_prime", optional_json(cfg.pulse.c2_prime)},
                  {"delta_prime", optional_json(cfg.pulse.delta_prime)},
                  {"c2_fs2", optional_json(cfg.pulse.c2_fs2)},
                  {"delta_rad_s", optional_json(cfg.pulse.delta_rad_s)},
                  {"lambda_c_nm", optional_json(cfg.pulse.lambda_c_nm)},
                  {"lambda_0_nm", cfg.pulse.lambda_0_nm},
                  {"bandwidth_rad_s", optional_json(cfg.pulse.bandwidth_rad_s)},
                  {"bandwidth_fwhm_rad_s", optional_json(cfg.pulse.bandwidth_fwhm_rad_s)},
                  {"cep", cfg.pulse.cep}};
    json sweep = {{"theta_pi", grid_json(cfg.sweep.theta_pi)},
                  {"c2_prime", grid_json(cfg.sweep.c2_prime)},
                  {"c2_fs2", grid_json(cfg.sweep.c2_fs2)},
                  {"delta_prime", grid_json(cfg.sweep.delta_prime)},
                  {"gamma_half_range", cfg.sweep.gamma_half_range},
                  {"gamma_count", cfg.sweep.gamma_count},
                  {"threshold", cfg.sweep.threshold},
                  {"fd_step", cfg.sweep.fd_step},
                  {"fit_variable", cfg.sweep.fit_variable},
                  {"fit_input", cfg.sweep.fit_input},
                  {"box",
                   {{"theta_pi_min", cfg.sweep.box.theta_pi_min},
                    {"theta_pi_max", cfg.sweep.box.theta_pi_max},
                    {"c2_prime_min", cfg.sweep.box.c2_prime_min},
                    {"c2_prime_max", cfg.sweep.box.c2_prime_max}}}};
    if (cfg.sweep.ensemble) {
        const EnsembleModel& e = *cfg.sweep.ensemble;
        sweep["ensemble"] = {{"ratio", e.ratio},
                             {"profile", e.profile == BeamProfile::Field ? "field" : "intensity"},
                             {"radial_samples", e.radial_samples},
                             {"verify", e.verify}};
    } else {
        sweep["ensemble"] = nullptr;
    }
    return {{"command", cfg.command},
            {"figure", cfg.figure},
            {"pulse", std::move(pulse)},
            {"propagation",
             {{"time_span_factor", cfg.propagation.time_span_factor},
              {"steps_per_rabi_cycle", cfg.propagation.steps_per_rabi_cycle},
              {"frame", cfg.propagation.frame == Frame::DiagonalDetuning ? "diagonal" : "phase"}}},
            {"sweep", std::move(sweep)},
            {"output", {{"directory", cfg.output.directory}, {"trajectory", cfg.output.trajectory}}}};
}

}  // namespace chirpctl
