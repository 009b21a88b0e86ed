#pragma once

// Run configuration: flat `section.key=value` text, defaults, validation,
// and the JSON run manifest.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "raman/errors.hpp"
#include "raman/experiments.hpp"
#include "raman/optimizer.hpp"
#include "raman/pulse_shaping.hpp"
#include "raman/srs_solver.hpp"
#include "raman/time_frequency.hpp"

#ifndef RAMAN_VERSION
#define RAMAN_VERSION "0.0.0"
#endif

namespace raman {

inline constexpr const char* kVersion = RAMAN_VERSION;

enum class SearchKind { parametric, phase_only, free_phase };

struct ScanSettings {
    std::size_t n_trials = 200;
    std::size_t phi_points = 17;
    double phi_start = 0.0;
    double phi_stop = 2.0 * std::numbers::pi;
    bool include_stop = false;

    std::vector<double> phases() const {
        std::vector<double> p(phi_points);
        const double denom = static_cast<double>(include_stop ? phi_points - 1 : phi_points);
        for (std::size_t k = 0; k < phi_points; ++k)
            p[k] = phi_points == 1 ? phi_start
                                   : phi_start + (phi_stop - phi_start) * static_cast<double>(k) / denom;
        return p;
    }
};

struct GuardSettings {
    bool calibrate = true;
    std::size_t pilot_trials = 16;
    SaturationBand band{};
};

struct RunConfig {
    std::uint64_t seed = 20020101;
    std::size_t threads = 1;
    GridSpec grid{};
    DoubleBlobSpec pulse{};
    SimConfig sim{};
    GuardSettings guard{};
    ScanSettings scan{};
    GAConfig ga{};
    SearchKind search = SearchKind::phase_only;
    std::size_t n_bins = 8;
    double sigma_t = kDefaultHusimiSigmaT;
    std::size_t tf_stride = 4;
    std::size_t trial_index = 0;

    /// Seed and thread count pushed into the nested configs.
    SimConfig sim_config() const {
        SimConfig s = sim;
        s.rng_seed = seed;
        return s;
    }
    GAConfig ga_config() const {
        GAConfig g = ga;
        g.rng_seed = seed;
        g.threads = threads;
        return g;
    }
    EnsembleOptions ensemble_options() const { return {threads, 0.0}; }

    SearchSpace search_space() const {
        switch (search) {
            case SearchKind::parametric: return SearchSpace::parametric();
            case SearchKind::free_phase: return SearchSpace::free_phase(pulse, n_bins);
            case SearchKind::phase_only: break;
        }
        return SearchSpace::phase_only(pulse);
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const char* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || p != end || !std::isfinite(out))
        throw ConfigError(key, "expected a finite number, got '" + v + "'");
    return out;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const char* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || p != end)
        throw ConfigError(key, "expected a nonnegative integer, got '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key, "expected true or false, got '" + v + "'");
}

struct KeyHandler {
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<nlohmann::json(const RunConfig&)> get;
    std::string help;
};

inline std::map<std::string, KeyHandler> make_key_table() {
    std::map<std::string, KeyHandler> t;
    auto real = [&t](std::string key, double& (*ref)(RunConfig&), std::string help) {
        t[key] = {[ref](RunConfig& c, const std::string& k, const std::string& v) { ref(c) = parse_double(k, v); },
                  [ref](const RunConfig& c) { return nlohmann::json(ref(const_cast<RunConfig&>(c))); },
                  std::move(help)};
    };
    auto count = [&t](std::string key, std::size_t& (*ref)(RunConfig&), std::string help) {
        t[key] = {[ref](RunConfig& c, const std::string& k, const std::string& v) {
                      ref(c) = static_cast<std::size_t>(parse_uint(k, v));
                  },
                  [ref](const RunConfig& c) { return nlohmann::json(ref(const_cast<RunConfig&>(c))); },
                  std::move(help)};
    };
    auto flag = [&t](std::string key, bool& (*ref)(RunConfig&), std::string help) {
        t[key] = {[ref](RunConfig& c, const std::string& k, const std::string& v) { ref(c) = parse_bool(k, v); },
                  [ref](const RunConfig& c) { return nlohmann::json(ref(const_cast<RunConfig&>(c))); },
                  std::move(help)};
    };

    t["seed"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.seed = parse_uint(k, v); },
                 [](const RunConfig& c) { return nlohmann::json(c.seed); }, "master RNG seed"};
    count("threads", [](RunConfig& c) -> std::size_t& { return c.threads; }, "worker threads for trial ensembles");

    count("grid.n_samples", [](RunConfig& c) -> std::size_t& { return c.grid.n_samples; }, "samples (power of two >= 64)");
    real("grid.dt", [](RunConfig& c) -> double& { return c.grid.dt; }, "time step, ps");
    real("grid.center_frequency", [](RunConfig& c) -> double& { return c.grid.center_frequency; }, "frame center, THz");

    real("pulse.blob_width", [](RunConfig& c) -> double& { return c.pulse.blob_width; }, "lobe intensity FWHM, THz");
    real("pulse.separation", [](RunConfig& c) -> double& { return c.pulse.separation; }, "lobe separation, THz");
    real("pulse.phase_offset", [](RunConfig& c) -> double& { return c.pulse.phase_offset; }, "inter-blob phase, rad");
    real("pulse.amplitude_ratio", [](RunConfig& c) -> double& { return c.pulse.amplitude_ratio; }, "upper/lower lobe amplitude");

    real("sim.alpha", [](RunConfig& c) -> double& { return c.sim.alpha; }, "pump-pump coupling strength");
    flag("sim.suppress_q3", [](RunConfig& c) -> bool& { return c.sim.suppress_q3; }, "drop the e1-e2 coherence");
    real("sim.w1", [](RunConfig& c) -> double& { return c.sim.w1; }, "inversion, mode 1");
    real("sim.w2", [](RunConfig& c) -> double& { return c.sim.w2; }, "inversion, mode 2");
    real("sim.delta", [](RunConfig& c) -> double& { return c.sim.delta; }, "residual detuning, rad/ps");
    real("sim.pump_scale", [](RunConfig& c) -> double& { return c.sim.pump_scale; }, "pump amplitude scale");
    count("sim.n_x", [](RunConfig& c) -> std::size_t& { return c.sim.grid.n_x; }, "propagation slices");
    real("sim.x_max", [](RunConfig& c) -> double& { return c.sim.grid.x_max; }, "reduced interaction length");
    real("sim.noise_sigma", [](RunConfig& c) -> double& { return c.sim.noise_sigma; }, "rms coherence seed");
    flag("sim.spatial_noise", [](RunConfig& c) -> bool& { return c.sim.spatial_noise; }, "independent seed per slice");

    flag("guard.calibrate", [](RunConfig& c) -> bool& { return c.guard.calibrate; }, "auto-calibrate pump_scale");
    count("guard.pilot_trials", [](RunConfig& c) -> std::size_t& { return c.guard.pilot_trials; }, "pilot ensemble size");
    real("guard.target", [](RunConfig& c) -> double& { return c.guard.band.target; }, "target median Stokes/pump");
    real("guard.lower", [](RunConfig& c) -> double& { return c.guard.band.lower; }, "lowest accepted Stokes/pump");
    real("guard.upper", [](RunConfig& c) -> double& { return c.guard.band.upper; }, "highest accepted Stokes/pump");

    count("scan.n_trials", [](RunConfig& c) -> std::size_t& { return c.scan.n_trials; }, "trials per phase point");
    count("scan.phi_points", [](RunConfig& c) -> std::size_t& { return c.scan.phi_points; }, "phase points");
    real("scan.phi_start", [](RunConfig& c) -> double& { return c.scan.phi_start; }, "first phase, rad");
    real("scan.phi_stop", [](RunConfig& c) -> double& { return c.scan.phi_stop; }, "phase range end, rad");
    flag("scan.include_stop", [](RunConfig& c) -> bool& { return c.scan.include_stop; }, "include phi_stop as a point");

    count("ga.population_size", [](RunConfig& c) -> std::size_t& { return c.ga.population_size; }, "population");
    count("ga.n_generations", [](RunConfig& c) -> std::size_t& { return c.ga.n_generations; }, "generations");
    count("ga.elite_count", [](RunConfig& c) -> std::size_t& { return c.ga.elite_count; }, "elites kept");
    real("ga.mutation_sigma", [](RunConfig& c) -> double& { return c.ga.mutation_sigma; }, "mutation width, fraction of range");
    real("ga.crossover_rate", [](RunConfig& c) -> double& { return c.ga.crossover_rate; }, "crossover probability");
    count("ga.trials_per_eval", [](RunConfig& c) -> std::size_t& { return c.ga.trials_per_eval; }, "trials per fitness");
    count("ga.tournament_size", [](RunConfig& c) -> std::size_t& { return c.ga.tournament_size; }, "tournament size");
    t["ga.objective_sign"] = {
        [](RunConfig& c, const std::string& k, const std::string& v) {
            if (v == "+1" || v == "1") c.ga.objective_sign = 1;
            else if (v == "-1") c.ga.objective_sign = -1;
            else throw ConfigError(k, "expected +1 or -1, got '" + v + "'");
        },
        [](const RunConfig& c) { return nlohmann::json(c.ga.objective_sign); }, "+1 favors mode 1, -1 mode 2"};
    t["ga.space"] = {
        [](RunConfig& c, const std::string& k, const std::string& v) {
            if (v == "parametric") c.search = SearchKind::parametric;
            else if (v == "phase_only") c.search = SearchKind::phase_only;
            else if (v == "free_phase") c.search = SearchKind::free_phase;
            else throw ConfigError(k, "expected parametric, phase_only or free_phase, got '" + v + "'");
        },
        [](const RunConfig& c) {
            return nlohmann::json(c.search == SearchKind::parametric   ? "parametric"
                                  : c.search == SearchKind::free_phase ? "free_phase"
                                                                       : "phase_only");
        },
        "search space"};
    count("ga.n_bins", [](RunConfig& c) -> std::size_t& { return c.n_bins; }, "free-phase bins");

    real("tf.sigma_t", [](RunConfig& c) -> double& { return c.sigma_t; }, "Husimi time smoothing, ps");
    count("tf.stride", [](RunConfig& c) -> std::size_t& { return c.tf_stride; }, "distribution dump stride");
    count("trial.index", [](RunConfig& c) -> std::size_t& { return c.trial_index; }, "trial index for `trial`");
    return t;
}

}  // namespace detail

inline const std::map<std::string, detail::KeyHandler>& config_keys() {
    static const auto table = detail::make_key_table();
    return table;
}

/// Sets one key from its text value. Unknown keys and malformed values throw
/// ConfigError naming the key.
inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
    const auto& keys = config_keys();
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError(key, "unknown configuration key");
    it->second.set(c, key, detail::trim(value));
}

/// Applies `key=value` lines; blank lines and `#` comments are skipped.
inline void apply_config_text(RunConfig& c, std::istream& in, const std::string& source = "config") {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string s = detail::trim(line);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(lineno), "expected key=value");
        set_config_value(c, detail::trim(s.substr(0, eq)), s.substr(eq + 1));
    }
}

inline void apply_config_file(RunConfig& c, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open " + path);
    apply_config_text(c, in, path);
}

/// Applies a `key=value` override.
inline void apply_assignment(RunConfig& c, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError(assignment, "expected key=value");
    set_config_value(c, detail::trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

/// Checks every invariant eagerly; the first violation throws ConfigError
/// naming its key.
inline void validate(const RunConfig& c) {
    auto require = [](bool ok, const char* key, const std::string& what) {
        if (!ok) throw ConfigError(key, what);
    };
    const auto n = c.grid.n_samples;
    require(n >= 64 && (n & (n - 1)) == 0, "grid.n_samples",
            "must be a power of two >= 64, got " + std::to_string(n));
    require(c.grid.dt > 0.0, "grid.dt", "must be positive");
    require(c.grid.nyquist() >= kMinMaskBandwidthTHz, "grid.dt",
            "Nyquist bandwidth below the required mask bandwidth");
    require(c.pulse.blob_width > 0.0, "pulse.blob_width", "must be positive");
    require(c.pulse.separation >= 0.0, "pulse.separation", "must be nonnegative");
    require(c.pulse.amplitude_ratio >= 0.0, "pulse.amplitude_ratio", "must be nonnegative");
    require(0.5 * c.pulse.separation + 2.0 * c.pulse.blob_width <= c.grid.nyquist(), "pulse.separation",
            "double-blob bandwidth exceeds the grid Nyquist frequency");
    require(c.grid.window() >= 4.0 * c.pulse.blob_duration(), "grid.n_samples",
            "time window shorter than 4x the pulse duration");
    require(c.sim.alpha >= 0.0, "sim.alpha", "must be >= 0");
    require(c.sim.pump_scale > 0.0, "sim.pump_scale", "must be > 0");
    require(c.sim.grid.n_x >= 2, "sim.n_x", "must be >= 2");
    require(c.sim.grid.x_max > 0.0, "sim.x_max", "must be positive");
    require(c.sim.noise_sigma > 0.0, "sim.noise_sigma", "must be > 0");
    require(c.guard.pilot_trials >= 1, "guard.pilot_trials", "must be >= 1");
    require(c.guard.band.lower > 0.0 && c.guard.band.lower < c.guard.band.upper, "guard.lower",
            "must be positive and below guard.upper");
    require(c.guard.band.target >= c.guard.band.lower && c.guard.band.target <= c.guard.band.upper,
            "guard.target", "must lie in [guard.lower, guard.upper]");
    require(c.scan.n_trials >= 1, "scan.n_trials", "must be >= 1");
    require(c.scan.phi_points >= 1, "scan.phi_points", "must be >= 1");
    require(c.ga.population_size >= 2, "ga.population_size", "must be >= 2");
    require(c.ga.elite_count < c.ga.population_size, "ga.elite_count", "must be < ga.population_size");
    require(c.ga.trials_per_eval >= 1, "ga.trials_per_eval", "must be >= 1");
    require(c.ga.mutation_sigma >= 0.0, "ga.mutation_sigma", "must be >= 0");
    require(c.ga.crossover_rate >= 0.0 && c.ga.crossover_rate <= 1.0, "ga.crossover_rate",
            "must be in [0, 1]");
    require(c.ga.tournament_size >= 1, "ga.tournament_size", "must be >= 1");
    require(c.n_bins >= 1, "ga.n_bins", "must be >= 1");
    require(c.sigma_t > 0.0, "tf.sigma_t", "must be positive");
    require(c.tf_stride >= 1, "tf.stride", "must be >= 1");
    require(c.threads >= 1, "threads", "must be >= 1");
}

/// Every key with its resolved value.
inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [key, h] : config_keys()) j[key] = h.get(c);
    return j;
}

/// Inverse of to_json; missing keys keep their defaults.
inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    for (const auto& [key, value] : j.items()) {
        const std::string text = value.is_string() ? value.get<std::string>() : value.dump();
        set_config_value(c, key, text);
    }
    validate(c);
    return c;
}

/// `key=value` lines for every key, suitable as a config file.
inline std::string to_config_text(const RunConfig& c) {
    std::ostringstream os;
    for (const auto& [key, h] : config_keys()) {
        const auto v = h.get(c);
        os << key << '=' << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    }
    return os.str();
}

struct RunManifest {
    std::string subcommand;
    RunConfig config;
    double duration_s = 0.0;
    std::vector<std::string> outputs;
    nlohmann::json extra = nlohmann::json::object();
};

inline nlohmann::json to_json(const RunManifest& m) {
    return {{"tool", "raman_sim"},
            {"version", kVersion},
            {"subcommand", m.subcommand},
            {"rng_seed", m.config.seed},
            {"config", to_json(m.config)},
            {"duration_s", m.duration_s},
            {"outputs", m.outputs},
            {"extra", m.extra}};
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
    RunManifest m;
    try {
        m.subcommand = j.at("subcommand").get<std::string>();
        m.config = config_from_json(j.at("config"));
        if (j.contains("outputs")) m.outputs = j.at("outputs").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("manifest", e.what());
    }
    return m;
}

}  // namespace raman
