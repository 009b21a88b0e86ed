// raman_sim: command-line front end for the two-mode Raman simulator.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "raman/cli.hpp"
#include "raman/config.hpp"

namespace {

struct CommonFlags {
    std::string config;
    std::string out;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::optional<double> alpha;
    std::optional<std::size_t> phi_points;
};

struct Overrides {
    std::vector<std::string> assignments;

    template <class T>
    void add(const std::string& key, const std::optional<T>& v) {
        if (v) assignments.push_back(key + "=" + std::to_string(*v));
    }
    void add(const std::string& key, const std::optional<double>& v) {
        if (v) assignments.push_back(key + "=" + raman::detail::format_double(*v));
    }
    void add(const std::string& key, const std::optional<std::string>& v) {
        if (v) assignments.push_back(key + "=" + *v);
    }
};

void add_common(CLI::App* app, CommonFlags& f) {
    app->add_option("--config", f.config, "key=value configuration file");
    app->add_option("--out", f.out, "output directory (default $RAMAN_SIM_OUT or ./raman_out)");
    app->add_option("--set", f.sets, "override, e.g. --set sim.alpha=3 (repeatable)");
    app->add_option("--seed", f.seed, "master RNG seed");
    app->add_option("--threads", f.threads, "worker threads for trial ensembles");
    app->add_option("--alpha", f.alpha, "pump-pump coupling strength");
    app->add_option("--phi-points", f.phi_points, "phase points in a scan");
}

raman::RunConfig resolve(const CommonFlags& f, const Overrides& extra) {
    raman::RunConfig c;
    if (!f.config.empty()) raman::apply_config_file(c, f.config);
    for (const auto& s : f.sets) raman::apply_assignment(c, s);
    Overrides o;
    o.add("seed", f.seed);
    o.add("threads", f.threads);
    o.add("sim.alpha", f.alpha);
    o.add("scan.phi_points", f.phi_points);
    for (const auto& s : o.assignments) raman::apply_assignment(c, s);
    for (const auto& s : extra.assignments) raman::apply_assignment(c, s);
    raman::validate(c);
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    using raman::cli::ExitCode;
    CLI::App app{"Two-mode transient Raman simulator and learning-control optimizer"};
    app.set_version_flag("--version", std::string(raman::kVersion));
    app.require_subcommand(1);

    CommonFlags common;
    std::string subcommand;

    auto* pulse = app.add_subcommand("pulse", "synthesize a double-blob pump; dump envelopes and Wigner/Husimi CSV");
    std::optional<double> pulse_phi, sigma_t;
    pulse->add_option("--phi", pulse_phi, "inter-blob phase offset, rad");
    pulse->add_option("--sigma-t", sigma_t, "Husimi time smoothing, ps");

    auto* trial = app.add_subcommand("trial", "run one Monte Carlo trial and print the result as JSON");
    std::optional<std::size_t> trial_index;
    std::optional<double> trial_phi;
    trial->add_option("--trial-index", trial_index, "trial substream index");
    trial->add_option("--phi", trial_phi, "inter-blob phase offset, rad");

    auto* scan = app.add_subcommand("scan", "mean mode asymmetry versus inter-blob phase");
    std::optional<std::size_t> n_trials;
    std::optional<double> phi_start, phi_stop;
    scan->add_option("--n-trials", n_trials, "trials per phase point");
    scan->add_option("--phi-start", phi_start, "first phase, rad");
    scan->add_option("--phi-stop", phi_stop, "phase range end, rad");

    auto* opt = app.add_subcommand("optimize", "genetic search over pulse shapes for mode selectivity");
    std::optional<std::string> sign, space;
    std::optional<std::size_t> generations, population, trials_per_eval;
    opt->add_option("--sign", sign, "objective sign: +1 favors mode 1, -1 mode 2");
    opt->add_option("--space", space, "parametric, phase_only or free_phase");
    opt->add_option("--generations", generations, "number of generations");
    opt->add_option("--population", population, "population size");
    opt->add_option("--trials-per-eval", trials_per_eval, "trials per fitness evaluation");

    auto* val = app.add_subcommand("validate", "run the invariant and oracle suite");

    auto* rep = app.add_subcommand("replay", "re-run a run manifest");
    std::string manifest_path;
    rep->add_option("manifest", manifest_path, "manifest.json of a previous run")->required();

    for (auto* sub : {pulse, trial, scan, opt, val}) add_common(sub, common);
    rep->add_option("--out", common.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ExitCode::ok : ExitCode::usage;
    }

    try {
        const auto dir = raman::cli::output_dir(common.out);
        raman::cli::RunOutput result;
        if (rep->parsed()) {
            result = raman::cli::replay(manifest_path, dir);
        } else {
            Overrides o;
            if (pulse->parsed()) {
                subcommand = "pulse";
                o.add("pulse.phase_offset", pulse_phi);
                o.add("tf.sigma_t", sigma_t);
            } else if (trial->parsed()) {
                subcommand = "trial";
                o.add("trial.index", trial_index);
                o.add("pulse.phase_offset", trial_phi);
            } else if (scan->parsed()) {
                subcommand = "scan";
                o.add("scan.n_trials", n_trials);
                o.add("scan.phi_start", phi_start);
                o.add("scan.phi_stop", phi_stop);
            } else if (opt->parsed()) {
                subcommand = "optimize";
                o.add("ga.objective_sign", sign);
                o.add("ga.space", space);
                o.add("ga.n_generations", generations);
                o.add("ga.population_size", population);
                o.add("ga.trials_per_eval", trials_per_eval);
            } else {
                subcommand = "validate";
            }
            const auto cfg = resolve(common, o);
            result = raman::cli::run(subcommand, cfg, dir);
        }
        std::cerr << "wrote " << result.manifest.outputs.size() << " files and manifest.json to "
                  << dir.string() << '\n';
        return result.status;
    } catch (const raman::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return ExitCode::usage;
    } catch (const raman::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return ExitCode::failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return ExitCode::failure;
    }
}
