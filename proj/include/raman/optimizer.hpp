#pragma once

// Evolutionary learning control over pulse-shaper parameters.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "raman/errors.hpp"
#include "raman/experiments.hpp"
#include "raman/pulse_shaping.hpp"
#include "raman/rng.hpp"
#include "raman/srs_solver.hpp"

namespace raman {

enum class GenomeKind { parametric, free_phase };

inline const char* to_string(GenomeKind k) {
    return k == GenomeKind::parametric ? "parametric" : "free_phase";
}

/// Flat gene vector. Parametric: (blob_width, separation, phase_offset,
/// amplitude_ratio). FreePhase: one phase per coarse spectral bin.
struct Genome {
    GenomeKind kind = GenomeKind::parametric;
    std::vector<double> genes;

    friend bool operator==(const Genome&, const Genome&) = default;
};

struct GeneBound {
    double lo = 0.0;
    double hi = 0.0;
    bool periodic = false;  ///< wraps into [lo, hi)

    bool fixed() const { return lo == hi; }
    double span() const { return hi - lo; }

    double clamp(double v) const {
        if (fixed()) return lo;
        if (periodic) {
            const double r = std::fmod(v - lo, span());
            return lo + (r < 0.0 ? r + span() : r);
        }
        return std::clamp(v, lo, hi);
    }
};

/// Genome kind plus bounds and, for free-phase genomes, the base double blob
/// whose support the bins tile.
struct SearchSpace {
    GenomeKind kind = GenomeKind::parametric;
    std::vector<GeneBound> bounds;
    DoubleBlobSpec base{};

    static SearchSpace parametric() {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        return {GenomeKind::parametric,
                {{0.2, 1.5, false}, {2.0, 5.0, false}, {0.0, two_pi, true}, {0.0, 1.0, false}},
                {}};
    }

    /// Only phase_offset free; the others pinned to `blob`.
    static SearchSpace phase_only(const DoubleBlobSpec& blob) {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        return {GenomeKind::parametric,
                {{blob.blob_width, blob.blob_width, false},
                 {blob.separation, blob.separation, false},
                 {0.0, two_pi, true},
                 {blob.amplitude_ratio, blob.amplitude_ratio, false}},
                blob};
    }

    static SearchSpace free_phase(const DoubleBlobSpec& blob, std::size_t n_bins = 8) {
        if (n_bins < 1) throw ParameterError("free-phase search needs n_bins >= 1");
        constexpr double two_pi = 2.0 * std::numbers::pi;
        DoubleBlobSpec flat = blob;
        flat.phase_offset = 0.0;
        return {GenomeKind::free_phase, std::vector<GeneBound>(n_bins, {0.0, two_pi, true}), flat};
    }

    std::size_t n_genes() const { return bounds.size(); }

    void validate(const Genome& g) const {
        if (g.kind != kind) throw ParameterError("genome kind does not match search space");
        if (g.genes.size() != bounds.size())
            throw ParameterError("genome has " + std::to_string(g.genes.size()) + " genes, space has " +
                                 std::to_string(bounds.size()));
        for (std::size_t i = 0; i < bounds.size(); ++i) {
            const auto& b = bounds[i];
            const double v = g.genes[i];
            const bool ok = b.periodic ? (v >= b.lo && v < b.hi) || b.fixed() : v >= b.lo && v <= b.hi;
            if (!ok || !std::isfinite(v))
                throw ParameterError("gene " + std::to_string(i) + " = " + std::to_string(v) +
                                     " outside its bounds");
        }
    }

    template <class Rng>
    Genome random_genome(Rng& rng) const {
        Genome g{kind, {}};
        for (const auto& b : bounds) {
            if (b.fixed()) {
                g.genes.push_back(b.lo);
                continue;
            }
            std::uniform_real_distribution<double> u(b.lo, b.hi);
            g.genes.push_back(b.clamp(u(rng)));
        }
        return g;
    }
};

/// Lower and upper frequency of each free-phase bin: the two-blob support
/// [-s/2 - 2w, s/2 + 2w] split evenly.
inline std::vector<std::pair<double, double>> phase_bins(const DoubleBlobSpec& blob,
                                                         std::size_t n_bins) {
    const double edge = 0.5 * blob.separation + 2.0 * blob.blob_width;
    const double width = 2.0 * edge / static_cast<double>(n_bins);
    std::vector<std::pair<double, double>> bins;
    for (std::size_t b = 0; b < n_bins; ++b)
        bins.emplace_back(-edge + width * static_cast<double>(b),
                          -edge + width * static_cast<double>(b + 1));
    return bins;
}

/// Frequency-domain pump (unit energy) realized by a genome.
inline ComplexEnvelope genome_spectrum(const Genome& g, const SearchSpace& space,
                                       const GridSpec& grid) {
    space.validate(g);
    if (g.kind == GenomeKind::parametric)
        return make_double_blob({g.genes[0], g.genes[1], g.genes[2], g.genes[3]}, grid);

    const auto base = make_double_blob(space.base, grid);
    ShaperMask mask = ShaperMask::identity(grid.n_samples);
    // Edge bins extend outward so the lobe tails follow them.
    const auto bins = phase_bins(space.base, g.genes.size());
    for (std::size_t k = 0; k < grid.n_samples; ++k) {
        const double f = grid.frequency_offset(k);
        std::size_t b = 0;
        while (b + 1 < bins.size() && f >= bins[b].second) ++b;
        mask.phases[k] = g.genes[b];
    }
    return apply_mask(base, mask);
}

inline ComplexEnvelope genome_pump(const Genome& g, const SearchSpace& space, const GridSpec& grid,
                                   double pump_scale) {
    auto pump = to_time(genome_spectrum(g, space, grid));
    pump *= pump_scale;
    return pump;
}

struct GAConfig {
    std::size_t population_size = 12;
    std::size_t n_generations = 10;
    std::size_t elite_count = 2;
    double mutation_sigma = 0.15;  ///< fraction of each gene's range
    double crossover_rate = 0.7;
    std::size_t trials_per_eval = 32;
    int objective_sign = +1;
    std::uint64_t rng_seed = 20020101;
    std::size_t tournament_size = 3;
    std::size_t threads = 1;

    void validate() const {
        if (population_size < 2) throw ParameterError("population_size must be >= 2");
        if (elite_count >= population_size)
            throw ParameterError("elite_count must be < population_size");
        if (trials_per_eval < 1) throw ParameterError("trials_per_eval must be >= 1");
        if (objective_sign != 1 && objective_sign != -1)
            throw ParameterError("objective_sign must be +1 or -1");
        if (!(mutation_sigma >= 0.0)) throw ParameterError("mutation_sigma must be >= 0");
        if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0))
            throw ParameterError("crossover_rate must be in [0, 1]");
        if (tournament_size < 1) throw ParameterError("tournament_size must be >= 1");
    }
};

// ---------------------------------------------------------------------------
// Generic GA

struct GenerationRecord {
    std::size_t generation = 0;
    double best = 0.0;       ///< best-ever (elite track)
    double gen_best = 0.0;   ///< best of this generation's scores
    double mean = 0.0;
    double stddev = 0.0;
    Genome best_genome;      ///< genome behind `best`
};

struct GAResult {
    Genome best;
    double best_fitness = 0.0;
    std::vector<GenerationRecord> history;
};

/// Scores a whole generation; `generation` selects its evaluation seeds.
using PopulationFitness =
    std::function<std::vector<double>(std::size_t generation, const std::vector<Genome>&)>;

/// Generational GA: tournament selection, uniform crossover, Gaussian
/// mutation scaled to gene ranges, elitism. Maximizes fitness.
inline GAResult genetic_search(const SearchSpace& space, const GAConfig& ga,
                               const PopulationFitness& fitness,
                               std::vector<Genome> initial = {}) {
    ga.validate();
    auto rng = rng::make_engine(ga.rng_seed, rng::Stream::genetic_algorithm, 0);
    std::vector<Genome> pop = std::move(initial);
    for (const auto& g : pop) space.validate(g);
    while (pop.size() < ga.population_size) pop.push_back(space.random_genome(rng));
    pop.resize(ga.population_size);

    GAResult out;
    bool have_best = false;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, ga.population_size - 1);

    for (std::size_t gen = 0; gen < ga.n_generations; ++gen) {
        const auto scores = fitness(gen, pop);
        if (scores.size() != pop.size()) throw Error("fitness returned the wrong number of scores");

        std::vector<std::size_t> order(pop.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

        GenerationRecord rec;
        rec.generation = gen;
        rec.gen_best = scores[order[0]];
        double sum = 0.0;
        for (double s : scores) sum += s;
        rec.mean = sum / static_cast<double>(scores.size());
        double ss = 0.0;
        for (double s : scores) ss += (s - rec.mean) * (s - rec.mean);
        rec.stddev = std::sqrt(ss / static_cast<double>(scores.size()));
        if (!have_best || rec.gen_best > out.best_fitness) {
            out.best = pop[order[0]];
            out.best_fitness = rec.gen_best;
            have_best = true;
        }
        rec.best = out.best_fitness;
        rec.best_genome = out.best;
        out.history.push_back(rec);

        if (gen + 1 == ga.n_generations) break;

        auto tournament = [&]() -> const Genome& {
            std::size_t winner = pick(rng);
            for (std::size_t t = 1; t < ga.tournament_size; ++t) {
                const std::size_t c = pick(rng);
                if (scores[c] > scores[winner]) winner = c;
            }
            return pop[winner];
        };

        std::vector<Genome> next;
        next.reserve(pop.size());
        for (std::size_t e = 0; e < ga.elite_count; ++e) next.push_back(pop[order[e]]);
        while (next.size() < pop.size()) {
            Genome child = tournament();
            if (unit(rng) < ga.crossover_rate) {
                const Genome& other = tournament();
                for (std::size_t i = 0; i < child.genes.size(); ++i)
                    if (unit(rng) < 0.5) child.genes[i] = other.genes[i];
            }
            if (ga.mutation_sigma > 0.0)
                for (std::size_t i = 0; i < child.genes.size(); ++i) {
                    const auto& b = space.bounds[i];
                    if (b.fixed()) continue;
                    child.genes[i] = b.clamp(child.genes[i] + ga.mutation_sigma * b.span() * normal(rng));
                }
            next.push_back(std::move(child));
        }
        pop = std::move(next);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Learning control objective

struct Evaluation {
    double objective = 0.0;  ///< objective_sign x mean asymmetry
    double stderr_ = 0.0;
    std::size_t n_effective = 0;
    std::size_t dropouts = 0;
    bool warning = false;    ///< more than half the trials had undefined asymmetry
};

inline std::uint64_t evaluation_seed(std::uint64_t master, std::size_t generation) {
    return rng::substream_seed(master, rng::Stream::evaluation_seeds, generation);
}

/// Mean asymmetry over trials_per_eval trials drawn from `seed_master`
/// (defaults to cfg.rng_seed, i.e. the same seeds as a phase scan).
inline Evaluation evaluate_objective(const Genome& g, const SearchSpace& space, const SimConfig& cfg,
                                     const GAConfig& ga, const GridSpec& grid,
                                     std::optional<std::uint64_t> seed_master = std::nullopt) {
    ga.validate();
    const auto pump = genome_pump(g, space, grid, cfg.pump_scale);
    const auto trials = seed_master
                            ? run_ensemble(pump, ga.trials_per_eval, cfg, {ga.threads, 0.0},
                                           *seed_master, true)
                            : run_ensemble(pump, ga.trials_per_eval, cfg, {ga.threads, 0.0});
    const auto stats = summarize(trials, pulse_energy(pump));
    Evaluation e;
    e.n_effective = stats.n_effective;
    e.dropouts = stats.dropouts;
    e.stderr_ = stats.stderr_;
    if (2 * stats.dropouts > trials.size()) {
        e.warning = true;
        return e;
    }
    e.objective = static_cast<double>(ga.objective_sign) * stats.mean;
    return e;
}

/// Learning-control loop: every generation scores all genomes on one fresh,
/// shared set of seeds.
inline GAResult optimize(const GAConfig& ga, const SimConfig& cfg, const SearchSpace& space,
                         const GridSpec& grid, std::vector<Genome> initial = {}) {
    cfg.validate();
    auto fitness = [&](std::size_t gen, const std::vector<Genome>& pop) {
        std::vector<double> scores;
        scores.reserve(pop.size());
        const std::uint64_t master = evaluation_seed(ga.rng_seed, gen);
        for (const auto& g : pop)
            scores.push_back(evaluate_objective(g, space, cfg, ga, grid, master).objective);
        return scores;
    };
    return genetic_search(space, ga, fitness, std::move(initial));
}

inline void write_history_csv(std::ostream& os, const GAResult& r) {
    os << "gen,best,mean,std\n";
    char line[128];
    for (const auto& h : r.history) {
        std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g\n", h.generation, h.best, h.mean,
                      h.stddev);
        os << line;
    }
}

}  // namespace raman
