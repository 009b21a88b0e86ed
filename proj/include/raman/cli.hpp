#pragma once

// Subcommand workflows behind raman_sim. Each takes a validated RunConfig
// and an output directory, writes its files there and returns the manifest.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "raman/config.hpp"
#include "raman/experiments.hpp"
#include "raman/optimizer.hpp"
#include "raman/pulse_shaping.hpp"
#include "raman/time_frequency.hpp"
#include "raman/validation.hpp"

namespace raman::cli {

namespace fs = std::filesystem;

enum ExitCode : int { ok = 0, failure = 1, usage = 2 };

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"pulse", "trial", "scan", "optimize", "validate"};
    return names;
}

/// --out, else $RAMAN_SIM_OUT, else ./raman_out.
inline fs::path output_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("RAMAN_SIM_OUT"); env && *env) return env;
    return "raman_out";
}

struct RunOutput {
    RunManifest manifest;
    int status = ExitCode::ok;
};

namespace detail {

class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    std::ofstream open(const std::string& name) {
        files_.push_back(name);
        std::ofstream os(dir_ / name, std::ios::binary);
        if (!os) throw Error("cannot write " + (dir_ / name).string());
        return os;
    }

    const std::vector<std::string>& files() const { return files_; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<std::string> files_;
};

inline void write_json(std::ostream& os, const nlohmann::json& j) { os << j.dump(2) << '\n'; }

inline nlohmann::json distribution_sidecar(const TFDistribution& d, const char* kind,
                                           const RunConfig& c) {
    return {{"kind", kind},
            {"n_times", d.n_times()},
            {"n_freqs", d.n_freqs()},
            {"t_first", d.time_axis.front()},
            {"t_step", d.time_step()},
            {"f_first", d.freq_axis.front()},
            {"f_step", d.freq_step()},
            {"stride", c.tf_stride},
            {"sigma_t", c.sigma_t},
            {"grid", {{"n_samples", c.grid.n_samples}, {"dt", c.grid.dt},
                      {"center_frequency", c.grid.center_frequency}}},
            {"columns", {"t", "f", "value"}},
            {"units", {{"t", "ps"}, {"f", "THz"}}}};
}

inline nlohmann::json to_json(const TrialResult& r) {
    return {{"trial_index", r.trial_index},
            {"E_S1", r.E_S1},
            {"E_S2", r.E_S2},
            {"asymmetry", r.asymmetry ? nlohmann::json(*r.asymmetry) : nlohmann::json(nullptr)},
            {"conservation_residual", r.conservation_residual},
            {"q1_0", {r.q1_0.real(), r.q1_0.imag()}},
            {"q2_0", {r.q2_0.real(), r.q2_0.imag()}},
            {"stokes_phase_1", std::arg(r.q1_0)},
            {"stokes_phase_2", std::arg(r.q2_0)}};
}

/// Applies the saturation guard when enabled; returns the SimConfig to run.
inline SimConfig guarded_sim(const RunConfig& c, nlohmann::json& extra) {
    SimConfig sim = c.sim_config();
    if (!c.guard.calibrate) return sim;
    const auto cal = calibrate_pump_scale(c.pulse, c.grid, sim, c.guard.pilot_trials, c.guard.band,
                                          c.ensemble_options());
    sim.pump_scale = cal.pump_scale;
    extra["calibration"] = {{"pump_scale", cal.pump_scale},
                            {"median_stokes_fraction", cal.median_stokes_fraction},
                            {"iterations", cal.iterations}};
    return sim;
}

}  // namespace detail

inline int run_pulse(const RunConfig& c, detail::OutputSet& out, nlohmann::json& extra) {
    const auto spec = make_double_blob(c.pulse, c.grid);
    const auto time = to_time(spec);
    {
        auto os = out.open("pulse_frequency.csv");
        write_envelope_csv(os, spec);
    }
    {
        auto os = out.open("pulse_time.csv");
        write_envelope_csv(os, time);
    }
    const auto w = downsample(wigner(time), c.tf_stride);
    {
        auto os = out.open("wigner.csv");
        write_distribution_csv(os, w);
    }
    {
        auto os = out.open("wigner.json");
        detail::write_json(os, detail::distribution_sidecar(w, "wigner", c));
    }
    const auto h = downsample(husimi(time, c.sigma_t), c.tf_stride);
    {
        auto os = out.open("husimi.csv");
        write_distribution_csv(os, h);
    }
    {
        auto os = out.open("husimi.json");
        detail::write_json(os, detail::distribution_sidecar(h, "husimi", c));
    }
    extra["energy"] = pulse_energy(spec);
    extra["blob_duration_ps"] = c.pulse.blob_duration();
    return ExitCode::ok;
}

inline int run_trial_cmd(const RunConfig& c, detail::OutputSet& out, nlohmann::json& extra,
                         std::ostream& log) {
    const SimConfig sim = detail::guarded_sim(c, extra);
    const auto pump = make_pump(c.pulse, c.grid, sim.pump_scale);
    const auto r = run_trial(pump, make_trial_seed(sim, c.trial_index), sim);
    const auto j = detail::to_json(r);
    auto os = out.open("trial.json");
    detail::write_json(os, j);
    log << j.dump(2) << '\n';
    return ExitCode::ok;
}

inline void write_scan_csv(std::ostream& os, const PhaseScanResult& r) {
    os << "phi,mean_asym,stderr,n_effective\n";
    char line[128];
    for (std::size_t k = 0; k < r.phases.size(); ++k) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%zu\n", r.phases[k], r.mean_asymmetry[k],
                      r.stderr_asymmetry[k], r.n_effective[k]);
        os << line;
    }
}

inline int run_scan(const RunConfig& c, detail::OutputSet& out, nlohmann::json& extra,
                    std::ostream& log) {
    const SimConfig sim = detail::guarded_sim(c, extra);
    const auto r = phase_scan(c.pulse, c.scan.phases(), c.scan.n_trials, sim, c.grid,
                              c.ensemble_options());
    {
        auto os = out.open("scan.csv");
        write_scan_csv(os, r);
    }
    extra["dropouts"] = r.dropouts;
    extra["median_stokes_fraction"] = r.median_stokes_fraction;
    extra["peak_to_peak"] = r.peak_to_peak();
    char line[160];
    for (std::size_t k = 0; k < r.phases.size(); ++k) {
        std::snprintf(line, sizeof line, "phi=%8.5f  mean=%+.5f  stderr=%.5f  n=%zu\n", r.phases[k],
                      r.mean_asymmetry[k], r.stderr_asymmetry[k], r.n_effective[k]);
        log << line;
    }
    return ExitCode::ok;
}

inline int run_optimize(const RunConfig& c, detail::OutputSet& out, nlohmann::json& extra,
                        std::ostream& log) {
    const SimConfig sim = detail::guarded_sim(c, extra);
    const GAConfig ga = c.ga_config();
    const SearchSpace space = c.search_space();
    const auto r = optimize(ga, sim, space, c.grid);
    {
        auto os = out.open("ga_history.csv");
        write_history_csv(os, r);
    }
    nlohmann::json gens = nlohmann::json::array();
    for (const auto& h : r.history)
        gens.push_back({{"gen", h.generation},
                        {"best", h.best},
                        {"generation_best", h.gen_best},
                        {"genes", h.best_genome.genes}});
    // Final score of the best genome on the scan's seed sequence.
    const auto final_eval = evaluate_objective(r.best, space, sim, ga, c.grid);
    const nlohmann::json best = {{"kind", to_string(space.kind)},
                                 {"genes", r.best.genes},
                                 {"fitness", r.best_fitness},
                                 {"objective", final_eval.objective},
                                 {"objective_stderr", final_eval.stderr_},
                                 {"objective_sign", ga.objective_sign},
                                 {"generations", gens}};
    {
        auto os = out.open("ga_best.json");
        detail::write_json(os, best);
    }
    char line[160];
    for (const auto& h : r.history) {
        std::snprintf(line, sizeof line, "gen %3zu  best=%+.5f  mean=%+.5f  std=%.5f\n", h.generation,
                      h.best, h.mean, h.stddev);
        log << line;
    }
    extra["best_fitness"] = r.best_fitness;
    return ExitCode::ok;
}

inline int run_validate(const RunConfig& c, detail::OutputSet& out, std::ostream& log) {
    const auto checks = run_validation_suite(c.sim_config(), c.grid, c.pulse);
    nlohmann::json report = nlohmann::json::array();
    bool all = true;
    char line[160];
    for (const auto& k : checks) {
        all = all && k.passed;
        report.push_back({{"check", k.name}, {"value", k.value}, {"tolerance", k.tolerance},
                          {"passed", k.passed}});
        std::snprintf(line, sizeof line, "%-4s %-36s %.3e (tol %.1e)\n", k.passed ? "ok" : "FAIL",
                      k.name.c_str(), k.value, k.tolerance);
        log << line;
    }
    auto os = out.open("validation.json");
    detail::write_json(os, report);
    return all ? ExitCode::ok : ExitCode::failure;
}

/// Runs one subcommand and writes manifest.json next to its outputs.
inline RunOutput run(const std::string& subcommand, const RunConfig& c, const fs::path& dir,
                     std::ostream& log = std::cout) {
    validate(c);
    detail::OutputSet out(dir);
    nlohmann::json extra = nlohmann::json::object();
    const auto t0 = std::chrono::steady_clock::now();
    int status = ExitCode::ok;
    if (subcommand == "pulse") status = run_pulse(c, out, extra);
    else if (subcommand == "trial") status = run_trial_cmd(c, out, extra, log);
    else if (subcommand == "scan") status = run_scan(c, out, extra, log);
    else if (subcommand == "optimize") status = run_optimize(c, out, extra, log);
    else if (subcommand == "validate") status = run_validate(c, out, log);
    else throw ConfigError("subcommand", "unknown subcommand '" + subcommand + "'");

    RunOutput r;
    r.status = status;
    r.manifest.subcommand = subcommand;
    r.manifest.config = c;
    r.manifest.outputs = out.files();
    r.manifest.extra = std::move(extra);
    r.manifest.duration_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream os(dir / "manifest.json", std::ios::binary);
    detail::write_json(os, to_json(r.manifest));
    return r;
}

inline RunManifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("manifest", "cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("manifest", e.what());
    }
    return manifest_from_json(j);
}

/// Re-runs a manifest into `dir`.
inline RunOutput replay(const fs::path& manifest_path, const fs::path& dir,
                        std::ostream& log = std::cout) {
    const auto m = read_manifest(manifest_path);
    return run(m.subcommand, m.config, dir, log);
}

}  // namespace raman::cli
