#include "chirpctl/cli.hpp"

#include <fmt/format.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "chirpctl/errors.hpp"
#include "chirpctl/geometry.hpp"
#include "chirpctl/parallel.hpp"
#include "chirpctl/records.hpp"
#include "chirpctl/robustness.hpp"

#ifndef CHIRPCTL_VERSION
#define CHIRPCTL_VERSION "unknown"
#endif

namespace chirpctl {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

constexpr std::array<std::string_view, 6> kFigureIds{"fig1a", "fig1b", "fig2",
                                                     "fig3b", "fig4",  "table1"};
constexpr std::array<std::pair<std::string_view, std::string_view>, 10> kCommands{{
    {"propagate", "final state of one pulse"},
    {"fidelity-curve", "fidelity against amplitude error, curvature and robust width"},
    {"curvature", "curvature by finite differences and perturbatively"},
    {"map-g", "curvature over a (theta/pi, c2') grid"},
    {"map-pe", "excited population over a (theta/pi, c2 in fs^2) grid"},
    {"bloch-traj", "area-parameterized Bloch trajectory and its topology"},
    {"robust-find", "robust point inside a search box"},
    {"robust-line", "robust points continued over a D' grid"},
    {"fit", "logistic fits of a robust-line CSV"},
    {"figure", "data for one figure or table"},
}};

// Comparison points of the fidelity figure, both at D' = 0.637 on the valley of
// minimal endpoint speed: A is the looped side (g ~ 0.11), C the unlooped side (g ~ 0.05).
constexpr double kPointATheta = 1.54;
constexpr double kPointAChirp = 1.675;
constexpr double kPointCTheta = 2.02;
constexpr double kPointCChirp = 3.375;

struct RunStatus {
    std::vector<std::string> failures;
    bool convergence = false;
};

// Collects the files of one run and writes the manifest last.
class Outputs {
public:
    explicit Outputs(std::string dir) : dir_(std::move(dir)) {
        if (dir_.empty()) return;
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec || !fs::is_directory(dir_)) {
            throw ConfigError(fmt::format("output.directory '{}' is not writable", dir_));
        }
    }

    bool enabled() const { return !dir_.empty(); }

    void text(const std::string& name, const std::function<void(std::ostream&)>& body) {
        if (!enabled()) return;
        std::ofstream os(fs::path(dir_) / name, std::ios::binary);
        if (!os) throw ConfigError(fmt::format("output.directory: cannot write {}", name));
        body(os);
        names_.push_back(name);
    }

    void document(const std::string& name, const json& j) {
        text(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    }

    void manifest(const RunConfig& cfg, const RunStatus& status) {
        if (!enabled()) return;
        json m = {{"version", library_version()},
                  {"config", config_to_json(cfg)},
                  {"outputs", names_},
                  {"status", status.failures.empty() ? "ok" : "partial"},
                  {"failures", status.failures}};
        std::ofstream os(fs::path(dir_) / "manifest.json", std::ios::binary);
        if (!os) throw ConfigError("output.directory: cannot write manifest.json");
        os << m.dump(2) << '\n';
    }

private:
    std::string dir_;
    std::vector<std::string> names_;
};

unsigned workers_of(const RunConfig& cfg) { return cfg.workers ? cfg.workers : default_workers(); }

std::vector<double> scaled(const GridSpec& g, double factor) {
    std::vector<double> v = g.values();
    for (double& x : v) x *= factor;
    return v;
}

json point_json(const PulseSpec& spec, double pe) {
    json j = spec;
    j["pe"] = pe;
    return j;
}

PulseSpec at(double theta_pi, double c2p, double dp) {
    return PulseSpec::from_dimensionless(theta_pi * kPi, c2p, dp);
}

void report_map(const GridMap2D& map, const std::string& what, RunStatus& status) {
    if (const std::size_t failed = map.failed_nodes()) {
        status.failures.push_back(fmt::format("{}: {} grid nodes masked", what, failed));
    }
}

// ---- commands -------------------------------------------------------------

void cmd_propagate(const RunConfig& cfg, Outputs& outs, std::ostream& out, RunStatus&) {
    const PulseSpec spec = cfg.pulse.resolve();
    const Propagation prop = propagate_checked(spec, cfg.propagation);
    const double pe = excited_probability(prop.state);
    const BlochVector r = bloch_coordinates(prop.state);
    out << fmt::format("P_e={:.6f}\n", pe);
    // keep rounding noise from printing as -0.000000
    auto tidy = [](double v) { return std::abs(v) < 5e-7 ? 0.0 : v; };
    out << fmt::format("bloch=({:.6f}, {:.6f}, {:.6f})\n", tidy(r.x()), tidy(r.y()), tidy(r.z()));
    json j = point_json(spec, pe);
    j["bloch"] = {r.x(), r.y(), r.z()};
    j["c0"] = {prop.state.c0.real(), prop.state.c0.imag()};
    j["c1"] = {prop.state.c1.real(), prop.state.c1.imag()};
    j["steps"] = prop.steps;
    outs.document("state.json", j);
    if (cfg.output.trajectory) {
        const Propagation hist = propagate(spec, cfg.propagation, 0.0, true);
        outs.text("trajectory.csv", [&](std::ostream& os) { write_state_history(os, *hist.record); });
    }
}

void fidelity_outputs(const PulseSpec& spec, const RunConfig& cfg, const std::string& tag,
                      Outputs& outs, std::ostream& out, json& reports) {
    const std::vector<double> gammas =
        symmetric_gamma_grid(cfg.sweep.gamma_half_range, cfg.sweep.gamma_count);
    const unsigned w = workers_of(cfg);
    const FidelityCurve curve = fidelity_curve(spec, gammas, cfg.propagation, w);
    const RobustWidth width = robust_width(curve, cfg.sweep.threshold);
    const CurvatureEstimate fd = curvature_fd(spec, cfg.sweep.fd_step, cfg.propagation);
    RobustnessReport report;
    report.g_fd = fd.value;
    report.g_pert = curvature_perturbative(spec, cfg.propagation);
    report.width = width.width;
    report.threshold = cfg.sweep.threshold;
    report.width_exceeds_grid = width.exceeds_grid;
    report.fd_noisy = fd.noisy;
    const std::string name = tag.empty() ? "fidelity_curve.csv" : fmt::format("fidelity_{}.csv", tag);
    outs.text(name, [&](std::ostream& os) { write_fidelity_curve(os, curve); });
    json j = report;
    j["pulse"] = spec;
    j["pe"] = excited_probability(propagate(spec, cfg.propagation).state);
    j["width_lower"] = width.lower;
    j["width_upper"] = width.upper;
    j["file"] = name;
    out << fmt::format("{}g_fd={:.6e} g_pert={:.6e} width={:.6f}{}\n",
                       tag.empty() ? "" : tag + ": ", report.g_fd, report.g_pert, report.width,
                       width.exceeds_grid ? " (exceeds grid)" : "");
    if (tag.empty()) {
        reports = std::move(j);
    } else {
        reports[tag] = std::move(j);
    }
}

void cmd_fidelity_curve(const RunConfig& cfg, Outputs& outs, std::ostream& out, RunStatus&) {
    json report;
    fidelity_outputs(cfg.pulse.resolve(), cfg, "", outs, out, report);
    outs.document("report.json", report);
}

void cmd_curvature(const RunConfig& cfg, Outputs& outs, std::ostream& out, RunStatus&) {
    const PulseSpec spec = cfg.pulse.resolve();
    const CurvatureEstimate fd = curvature_fd(spec, cfg.sweep.fd_step, cfg.propagation);
    const double gp = curvature_perturbative(spec, cfg.propagation);
    out << fmt::format("g_fd={:.9e}{}\ng_pert={:.9e}\n", fd.value, fd.noisy ? " (noisy)" : "", gp);
    outs.document("curvature.json", {{"pulse", spec},
                                     {"g_fd", fd.value},
                                     {"g_fd_coarse", fd.coarse},
                                     {"g_fd_fine", fd.fine},
                                     {"fd_step", cfg.sweep.fd_step},
                                     {"fd_noisy", fd.noisy},
                                     {"g_pert", gp}});
}

void write_map(const GridMap2D& map, const std::string& stem, Outputs& outs) {
    outs.text(stem + ".csv", [&](std::ostream& os) { write_grid(os, map); });
    outs.document(stem + ".json", map);
}

void cmd_map_g(const RunConfig& cfg, Outputs& outs, std::ostream& out, RunStatus& status) {
    const PulseSpec spec = cfg.pulse.resolve();
    const GridMap2D map = map_curvature(scaled(cfg.sweep.theta_pi, kPi), cfg.sweep.c2_prime.values(),
                                        spec.detuning_prime(), cfg.propagation, workers_of(cfg));
    write_map(map, "map_g", outs);
    report_map(map, "map-g", status);
    out << fmt::format("map_g {}x{} nodes, {} masked\n", map.rows(), map.cols(), map.failed_nodes());
}

void cmd_map_pe(const RunConfig& cfg, Outputs& outs, std::ostream& out, RunStatus& status) {
    const PulseSpec spec = cfg.pulse.resolve();
    const GridMap2D map =
        map_pe(scaled(cfg.sweep.theta_pi, kPi), scaled(cfg.sweep.c2_fs2, 1e-30), spec.detuning,
               spec.bandwidth, cfg.sweep.ensemble, cfg.propagation, workers_of(cfg));
    write_map(map, "map_pe", outs);
    report_map(map, "map-pe", status);
    out << fmt::format("map_pe {}x{} nodes, {} masked\n", map.rows(), map.cols(), map.failed_nodes());
}

CuspReport trajectory_outputs(double c2p, double dp, double cep, const RunConfig& cfg,
                              const std::string& name, Outputs& outs) {
    const GridSpec& g = cfg.sweep.theta_pi;
    const unsigned w = workers_of(cfg);
    const ThetaTrajectory traj =
        theta_trajectory(c2p, dp, g.min * kPi, g.max * kPi, g.count, cfg.propagation, cep, w);
    const CuspReport rep = classify_topology(traj, {}, cfg.propagation, w);
    outs.text(name, [&](std::ostream& os) { write_theta_trajectory(os, traj); });
    return rep;
}

void cmd_bloch_traj(const RunConfig& cfg, Outputs& outs, std::ostream& out, RunStatus&) {
    const PulseSpec spec = cfg.pulse.resolve();
    const CuspReport rep = trajectory_outputs(spec.chirp_prime(), spec.detuning_prime(), spec.cep,
                                              cfg, "trajectory.csv", outs);
    json j = rep;
    j["c2_prime"] = spec.chirp_prime();
    j["delta_prime"] = spec.detuning_prime();
    j["cep"] = spec.cep;
    outs.document("cusp.json", j);
    out << fmt::format("topology={} theta_star_pi={:.6f} min_speed={:.6e}\n",
                       to_string(rep.classification), rep.theta_star / kPi, rep.min_speed);
}

RobustPoint search(double dp, const RunConfig& cfg) {
    return find_robust_point(dp, cfg.sweep.box.to_box(), std::nullopt, {}, cfg.propagation, workers_of(cfg));
}

void print_point(const RobustPoint& p, std::ostream& out, const std::string& tag = "") {
    out << fmt::format("{}theta_pi={:.6f} c2_prime={:.6f} delta_prime={:.6f} g={:.3e} P_e={:.6f}{}\n",
                       tag, p.theta / kPi, p.chirp_prime, p.detuning_prime, p.g, p.pe,
                       p.robust ? "" : " (not robust)");
}

void cmd_robust_find(const RunConfig& cfg, Outputs& outs, std::ostream& out, RunStatus& status) {
    const PulseSpec spec = cfg.pulse.resolve();
    const RobustPoint p = search(spec.detuning_prime(), cfg);
    outs.document("robust_point.json", p);
    print_point(p, out);
    if (!p.robust) {
        status.convergence = true;
        status.failures.push_back("robust-find: no point with vanishing curvature in the box");
    }
}

LineOptions line_options(const RunConfig& cfg) {
    LineOptions opts;
    opts.anchor_box = cfg.sweep.box.to_box();
    return opts;
}

RobustLine line_outputs(const RunConfig& cfg, Outputs& outs, std::ostream& out, RunStatus& status) {
    const GridSpec& g = cfg.sweep.delta_prime;
    const RobustLine line = trace_robust_line(g.min, g.max, g.count, line_options(cfg),
                                              cfg.propagation, workers_of(cfg));
    outs.text("robust_line.csv", [&](std::ostream& os) { write_robust_line(os, line); });
    outs.document("robust_line.json", line);
    out << fmt::format("robust line: {} points{}\n", line.points.size(),
                       line.complete ? "" : " (incomplete: " + line.failure + ")");
    if (!line.complete) status.failures.push_back("robust-line: " + line.failure);
    return line;
}

void cmd_robust_line(const RunConfig& cfg, Outputs& outs, std::ostream& out, RunStatus& status) {
    line_outputs(cfg, outs, out, status);
}

std::vector<FitVariable> fit_variables(const std::string& name) {
    if (name == "all") {
        return {FitVariable::DetuningPrime, FitVariable::ChirpPrime, FitVariable::ThetaOverPi};
    }
    try {
        return {fit_variable_from_string(name)};
    } catch (const std::exception&) {
        throw ConfigError("sweep.fit_variable must be all, delta_prime, c2_prime or theta_over_pi");
    }
}

// Fits every requested variable; failed fits are recorded, not fatal.
json fit_line(const std::vector<RobustPoint>& points, const std::string& variables,
              std::ostream& out, RunStatus& status) {
    json fits = json::array();
    for (FitVariable v : fit_variables(variables)) {
        std::vector<double> xs, ys;
        for (const RobustPoint& p : points) {
            if (p.pe >= kFitPeMin && p.pe <= kFitPeMax) {
                xs.push_back(line_coordinate(p, v));
                ys.push_back(p.pe);
            }
        }
        try {
            const LogisticFit f = fit_logistic(xs, ys, v);
            fits.push_back(f);
            out << fmt::format("{}: A={:.4f} B={:.4f} C={:.4g} D={:.4f} rms={:.2e}\n", to_string(v),
                               f.a, f.b, f.c, f.d, f.residual_rms);
        } catch (const FitError& e) {
            status.convergence = true;
            status.failures.push_back(fmt::format("fit {}: {}", to_string(v), e.what()));
        } catch (const ConfigError& e) {
            status.failures.push_back(fmt::format("fit {}: {}", to_string(v), e.what()));
        }
    }
    return fits;
}

std::vector<RobustPoint> read_robust_line(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError(fmt::format("sweep.fit_input: cannot open '{}'", path));
    std::string header;
    std::getline(is, header);
    std::vector<std::string> names;
    {
        std::stringstream ss(header);
        for (std::string col; std::getline(ss, col, ',');) names.push_back(col);
    }
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < names.size(); ++i) index[names[i]] = i;
    for (const char* need : {"delta_prime", "c2_prime", "theta_over_pi", "pe"}) {
        if (!index.count(need)) {
            throw ConfigError(fmt::format("sweep.fit_input: missing column '{}'", need));
        }
    }
    std::vector<RobustPoint> points;
    for (std::string line; std::getline(is, line);) {
        if (line.empty()) continue;
        std::vector<double> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) {
            try {
                cells.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError(fmt::format("sweep.fit_input: bad number '{}'", cell));
            }
        }
        if (cells.size() != names.size()) throw ConfigError("sweep.fit_input: ragged row");
        RobustPoint p;
        p.detuning_prime = cells[index["delta_prime"]];
        p.chirp_prime = cells[index["c2_prime"]];
        p.theta = cells[index["theta_over_pi"]] * kPi;
        p.pe = cells[index["pe"]];
        if (index.count("g")) p.g = cells[index["g"]];
        p.robust = true;
        points.push_back(p);
    }
    return points;
}

void cmd_fit(const RunConfig& cfg, Outputs& outs, std::ostream& out, RunStatus& status) {
    if (cfg.sweep.fit_input.empty()) throw ConfigError("sweep.fit_input is required for fit");
    const json fits = fit_line(read_robust_line(cfg.sweep.fit_input), cfg.sweep.fit_variable, out, status);
    outs.document("fits.json", fits);
}

// ---- figures --------------------------------------------------------------

void fig1a(const RunConfig& cfg, Outputs& outs, std::ostream& out, RunStatus& status) {
    cmd_map_g(cfg, outs, out, status);
    const RobustPoint b = search(cfg.pulse.resolve().detuning_prime(), cfg);
    outs.document("robust_point_B.json", b);
    print_point(b, out, "B: ");
    if (!b.robust) status.failures.push_back("fig1a: robust point B not found");
}

void fig1b(const RunConfig& cfg, Outputs& outs, std::ostream& out, RunStatus& status) {
    const double dp = cfg.pulse.resolve().detuning_prime();
    const RobustPoint b = search(dp, cfg);
    if (!b.robust) status.failures.push_back("fig1b: robust point B not found");
    const RabiReference rabi = rabi_reference(0.5);
    json reports = json::object();
    fidelity_outputs(at(kPointATheta, kPointAChirp, dp), cfg, "A", outs, out, reports);
    fidelity_outputs(PulseSpec::from_dimensionless(b.theta, b.chirp_prime, dp), cfg, "B", outs, out,
                     reports);
    fidelity_outputs(at(kPointCTheta, kPointCChirp, dp), cfg, "C", outs, out, reports);
    fidelity_outputs(PulseSpec::from_dimensionless(rabi.area, 0.0, 0.0), cfg, "Rabi", outs, out,
                     reports);
    const double ratio = reports["B"]["width"].get<double>() / reports["Rabi"]["width"].get<double>();
    reports["width_ratio_B_over_Rabi"] = ratio;
    out << fmt::format("width ratio B/Rabi={:.4f}\n", ratio);
    outs.document("reports.json", reports);
}

void fig2(const RunConfig& cfg, Outputs& outs, std::ostream& out, RunStatus& status) {
    const double dp = cfg.pulse.resolve().detuning_prime();
    const RobustPoint b = search(dp, cfg);
    if (!b.robust) status.failures.push_back("fig2: robust point B not found");
    json reports = json::object();
    const std::array<std::pair<const char*, double>, 3> curves{
        {{"A", kPointAChirp}, {"B", b.chirp_prime}, {"C", kPointCChirp}}};
    for (const auto& [tag, c2p] : curves) {
        const CuspReport rep =
            trajectory_outputs(c2p, dp, 0.0, cfg, fmt::format("trajectory_{}.csv", tag), outs);
        json j = rep;
        j["c2_prime"] = c2p;
        j["delta_prime"] = dp;
        reports[tag] = j;
        out << fmt::format("{}: c2_prime={:.4f} topology={} theta_star_pi={:.4f}\n", tag, c2p,
                           to_string(rep.classification), rep.theta_star / kPi);
    }
    outs.document("cusp.json", reports);
}

void fig3b(const RunConfig& cfg, Outputs& outs, std::ostream& out, RunStatus& status) {
    cmd_map_pe(cfg, outs, out, status);
    const PulseSpec spec = cfg.pulse.resolve();
    const RobustPoint star = search(spec.detuning_prime(), cfg);
    json j = star;
    j["pulse"] = PulseSpec::from_dimensionless(star.theta, star.chirp_prime, star.detuning_prime,
                                               spec.bandwidth);
    if (cfg.sweep.ensemble) {
        const PulseSpec s = PulseSpec::from_dimensionless(star.theta, star.chirp_prime,
                                                          star.detuning_prime);
        const EnsembleAverage avg = ensemble_average(
            [&](double scale) {
                PulseSpec scaled_spec = s;
                scaled_spec.area *= scale;
                return excited_probability(propagate(scaled_spec, cfg.propagation).state);
            },
            *cfg.sweep.ensemble);
        j["pe_ensemble"] = avg.value;
        out << fmt::format("star ensemble P_e={:.6f}\n", avg.value);
    }
    outs.document("star_point.json", j);
    print_point(star, out, "star: ");
    if (!star.robust) status.failures.push_back("fig3b: star point not found");
}

void fig4(const RunConfig& cfg, Outputs& outs, std::ostream& out, RunStatus& status) {
    line_outputs(cfg, outs, out, status);
}

void table1(const RunConfig& cfg, Outputs& outs, std::ostream& out, RunStatus& status) {
    const RobustLine line = line_outputs(cfg, outs, out, status);
    outs.document("table1.json", fit_line(line.points, cfg.sweep.fit_variable, out, status));
}

using Handler = void (*)(const RunConfig&, Outputs&, std::ostream&, RunStatus&);

Handler command_handler(const RunConfig& cfg) {
    static const std::map<std::string, Handler, std::less<>> commands{
        {"propagate", cmd_propagate}, {"fidelity-curve", cmd_fidelity_curve},
        {"curvature", cmd_curvature}, {"map-g", cmd_map_g},
        {"map-pe", cmd_map_pe},       {"bloch-traj", cmd_bloch_traj},
        {"robust-find", cmd_robust_find}, {"robust-line", cmd_robust_line},
        {"fit", cmd_fit}};
    static const std::map<std::string, Handler, std::less<>> figures{
        {"fig1a", fig1a}, {"fig1b", fig1b}, {"fig2", fig2},
        {"fig3b", fig3b}, {"fig4", fig4},   {"table1", table1}};
    if (cfg.command == "figure") {
        auto it = figures.find(cfg.figure);
        if (it == figures.end()) throw ConfigError(fmt::format("unknown figure id '{}'", cfg.figure));
        return it->second;
    }
    auto it = commands.find(cfg.command);
    if (it == commands.end()) throw ConfigError(fmt::format("unknown command '{}'", cfg.command));
    return it->second;
}

std::string valid_figures() {
    std::string s;
    for (std::string_view id : kFigureIds) {
        if (!s.empty()) s += ", ";
        s += id;
    }
    return s;
}

// ---- argument handling -----------------------------------------------------

struct Flags {
    std::string config_path;
    std::string figure;
    std::map<std::string, double> pulse;
    std::map<std::string, std::string> grids;
    std::optional<std::string> out_dir;
    std::optional<unsigned> workers;
    std::optional<double> span, steps_per_cycle, threshold, gamma_range, fd_step, ensemble_ratio;
    std::optional<std::size_t> gamma_count, radial_samples;
    std::optional<std::string> frame, profile, fit_input, fit_variable;
    bool trajectory = false;
    bool no_ensemble = false;
};

void add_options(CLI::App& sub, Flags& f, bool figure) {
    sub.add_option("--config", f.config_path, "JSON run configuration (or a manifest)");
    if (figure) {
        sub.add_option("id", f.figure, "figure id: " + valid_figures())->required();
    }
    struct PulseFlag {
        const char* flag;
        const char* key;
        const char* help;
    };
    static const PulseFlag pulse_flags[] = {
        {"--theta-pi", "theta_pi", "pulse area in units of pi"},
        {"--c2-prime", "c2_prime", "dimensionless chirp c2*bandwidth^2"},
        {"--delta-prime", "delta_prime", "dimensionless detuning delta/bandwidth"},
        {"--cep", "cep", "carrier-envelope phase (rad)"},
        {"--bandwidth", "bandwidth_rad_s", "1/e field half-width (rad/s)"},
        {"--bandwidth-fwhm", "bandwidth_fwhm_rad_s", "field FWHM (rad/s)"},
        {"--c2-fs2", "c2_fs2", "chirp in fs^2"},
        {"--delta-rad-s", "delta_rad_s", "detuning in rad/s"},
        {"--lambda-nm", "lambda_c_nm", "central wavelength in nm"},
        {"--lambda0-nm", "lambda_0_nm", "transition wavelength in nm"},
    };
    for (const PulseFlag& pf : pulse_flags) {
        sub.add_option_function<double>(
            pf.flag, [&f, key = pf.key](const double& v) { f.pulse[key] = v; }, pf.help);
    }
    for (const char* g : {"theta_pi", "c2_prime", "c2_fs2", "delta_prime"}) {
        std::string flag = std::string("--") + g + "-grid";
        std::replace(flag.begin(), flag.end(), '_', '-');
        sub.add_option_function<std::string>(
            flag, [&f, key = std::string(g)](const std::string& v) { f.grids[key] = v; },
            "grid as min:max:count");
    }
    sub.add_option("--out", f.out_dir, "output directory");
    sub.add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
    sub.add_option("--span", f.span, "time span in pulse durations");
    sub.add_option("--steps-per-cycle", f.steps_per_cycle, "steps per Rabi cycle");
    sub.add_option("--frame", f.frame, "diagonal or phase");
    sub.add_option("--threshold", f.threshold, "fidelity threshold for the robust width");
    sub.add_option("--gamma-range", f.gamma_range, "half range of the amplitude error");
    sub.add_option("--gamma-count", f.gamma_count, "odd number of fidelity samples");
    sub.add_option("--fd-step", f.fd_step, "finite-difference step in gamma");
    sub.add_option("--ensemble-ratio", f.ensemble_ratio, "cloud/beam diameter ratio");
    sub.add_option("--ensemble-profile", f.profile, "field or intensity");
    sub.add_option("--radial-samples", f.radial_samples, "ensemble quadrature nodes");
    sub.add_flag("--no-ensemble", f.no_ensemble, "disable ensemble averaging");
    sub.add_option("--fit-input", f.fit_input, "robust line CSV to fit");
    sub.add_option("--fit-variable", f.fit_variable, "all, delta_prime, c2_prime or theta_over_pi");
    sub.add_flag("--trajectory", f.trajectory, "also write the time history / trajectory");
}

json grid_patch(const std::string& key, const std::string& text) {
    double lo = 0.0, hi = 0.0;
    long long count = 0;
    char c1 = 0, c2 = 0;
    std::stringstream ss(text);
    if (!(ss >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':' || !ss.eof() || count <= 0) {
        throw ConfigError(fmt::format("sweep.{} grid must be min:max:count, got '{}'", key, text));
    }
    return {{"min", lo}, {"max", hi}, {"count", count}};
}

json flags_patch(const Flags& f) {
    json p = json::object();
    for (const auto& [k, v] : f.pulse) p["pulse"][k] = v;
    for (const auto& [k, v] : f.grids) p["sweep"][k] = grid_patch(k, v);
    if (f.out_dir) p["output"]["directory"] = *f.out_dir;
    if (f.trajectory) p["output"]["trajectory"] = true;
    if (f.span) p["propagation"]["time_span_factor"] = *f.span;
    if (f.steps_per_cycle) p["propagation"]["steps_per_rabi_cycle"] = *f.steps_per_cycle;
    if (f.frame) p["propagation"]["frame"] = *f.frame;
    if (f.threshold) p["sweep"]["threshold"] = *f.threshold;
    if (f.gamma_range) p["sweep"]["gamma_half_range"] = *f.gamma_range;
    if (f.gamma_count) p["sweep"]["gamma_count"] = *f.gamma_count;
    if (f.fd_step) p["sweep"]["fd_step"] = *f.fd_step;
    if (f.fit_input) p["sweep"]["fit_input"] = *f.fit_input;
    if (f.fit_variable) p["sweep"]["fit_variable"] = *f.fit_variable;
    if (f.ensemble_ratio) p["sweep"]["ensemble"]["ratio"] = *f.ensemble_ratio;
    if (f.profile) p["sweep"]["ensemble"]["profile"] = *f.profile;
    if (f.radial_samples) p["sweep"]["ensemble"]["radial_samples"] = *f.radial_samples;
    return p;
}

json read_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError(fmt::format("config: cannot open '{}'", path));
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("config: {} is not valid JSON ({})", path, e.what()));
    }
    if (j.is_object() && j.contains("config") && j.contains("version")) return j.at("config");
    return j;
}

RunConfig resolve(const std::string& command, const Flags& f) {
    json file = f.config_path.empty() ? json::object() : read_config_file(f.config_path);
    if (!file.is_object()) throw ConfigError("config must be a JSON object");
    std::string cmd = command;
    std::string figure = f.figure;
    if (cmd == "run") {
        if (!file.contains("command") || !file.at("command").is_string()) {
            throw ConfigError("command is required in the config for 'run'");
        }
        cmd = file.at("command").get<std::string>();
        if (cmd == "figure" && file.contains("figure") && file.at("figure").is_string()) {
            figure = file.at("figure").get<std::string>();
        }
    }
    if (cmd == "figure" && std::find(kFigureIds.begin(), kFigureIds.end(), figure) == kFigureIds.end()) {
        throw ConfigError(fmt::format("unknown figure id '{}'; valid ids: {}", figure, valid_figures()));
    }
    RunConfig base;
    if (cmd == "figure") base = figure_preset(figure);
    json merged = config_to_json(base);
    // A partial ensemble patch on a run without ensemble starts from the defaults.
    auto seed_ensemble = [&](const json& patch) {
        if (patch.contains("sweep") && patch["sweep"].contains("ensemble") &&
            patch["sweep"]["ensemble"].is_object() && merged["sweep"]["ensemble"].is_null()) {
            RunConfig d;
            d.sweep.ensemble = EnsembleModel{};
            merged["sweep"]["ensemble"] = config_to_json(d)["sweep"]["ensemble"];
        }
    };
    seed_ensemble(file);
    merged.merge_patch(file);
    const json patch = flags_patch(f);
    seed_ensemble(patch);
    merged.merge_patch(patch);
    if (f.no_ensemble) merged["sweep"]["ensemble"] = nullptr;
    merged["command"] = cmd;
    merged["figure"] = cmd == "figure" ? figure : "";
    RunConfig cfg = parse_config(merged);
    if (f.workers) cfg.workers = *f.workers;
    return cfg;
}

}  // namespace

std::string library_version() { return CHIRPCTL_VERSION; }

std::span<const std::string_view> figure_ids() { return kFigureIds; }

RunConfig figure_preset(std::string_view id) {
    RunConfig cfg;
    cfg.command = "figure";
    cfg.figure = std::string(id);
    cfg.pulse.delta_prime = 0.637;
    if (id == "fig1a") {
        cfg.sweep.theta_pi = {0.1, 3.0, 59};
        cfg.sweep.c2_prime = {0.0, 4.0, 41};
    } else if (id == "fig1b") {
        cfg.sweep.gamma_half_range = 0.5;
        cfg.sweep.gamma_count = 201;
    } else if (id == "fig2") {
        cfg.sweep.theta_pi = {0.0, 3.0, 301};
    } else if (id == "fig3b") {
        cfg.pulse.delta_prime.reset();
        cfg.pulse.delta_rad_s = 1.04e13;
        cfg.pulse.bandwidth_fwhm_rad_s = 3.1e13;
        cfg.sweep.theta_pi = {0.0, 3.0, 25};
        cfg.sweep.c2_fs2 = {0.0, 16000.0, 17};
        cfg.sweep.ensemble = EnsembleModel{0.47, BeamProfile::Field, 32, true};
    } else if (id == "fig4" || id == "table1") {
        cfg.sweep.delta_prime = {0.1, 1.2, 23};
    } else {
        throw ConfigError(fmt::format("unknown figure id '{}'; valid ids: {}", id, valid_figures()));
    }
    return cfg;
}

int run_config(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        const Handler handler = command_handler(cfg);
        Outputs outs(cfg.output.directory);
        RunStatus status;
        try {
            handler(cfg, outs, out, status);
        } catch (const ConvergenceError& e) {
            status.failures.push_back(e.what());
            outs.manifest(cfg, status);
            err << "error: " << e.what() << '\n';
            return kExitConvergence;
        }
        outs.manifest(cfg, status);
        for (const std::string& f : status.failures) err << "warning: " << f << '\n';
        if (status.failures.empty()) return kExitOk;
        return status.convergence && cfg.command != "figure" ? kExitConvergence : kExitPartial;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const GridError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConvergence;
    } catch (const FitError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConvergence;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Two-level control with detuned, chirped Gaussian pulses", "chirpctl"};
    app.set_version_flag("--version", library_version());
    app.require_subcommand(1);
    Flags flags;
    for (const auto& [name, help] : kCommands) {
        CLI::App* sub = app.add_subcommand(std::string(name), std::string(help));
        add_options(*sub, flags, name == "figure");
    }
    add_options(*app.add_subcommand("run", "run the command stored in --config"), flags, false);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        if (code == 0) return kExitOk;
        if (app.got_subcommand("figure") && flags.figure.empty()) {
            err << "valid figure ids: " << valid_figures() << '\n';
        }
        return kExitConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    RunConfig cfg;
    try {
        cfg = resolve(command, flags);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const json::exception& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    return run_config(cfg, out, err);
}

int run_cli(int argc, const char* const* argv) { return run_cli(argc, argv, std::cout, std::cerr); }

}  // namespace chirpctl
