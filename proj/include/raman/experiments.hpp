#pragma once

// Monte Carlo trials over random coherence seeds, the mode-asymmetry
// observable, phase-offset scans and the saturation guard.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "raman/errors.hpp"
#include "raman/pulse_shaping.hpp"
#include "raman/rng.hpp"
#include "raman/srs_solver.hpp"

namespace raman {

/// Trials whose total Stokes energy falls below this fraction of the pump
/// energy have no meaningful asymmetry and are dropped from ensemble means.
inline constexpr double kAsymmetryFloor = 1e-12;

struct TrialSeed {
    cplx q1_0;
    cplx q2_0;
    std::size_t trial_index = 0;
    /// Per-slice (q1, q2) when spatially resolved noise is enabled.
    std::vector<std::pair<cplx, cplx>> slice_seeds;

    double stokes_phase_1() const { return std::arg(q1_0); }
    double stokes_phase_2() const { return std::arg(q2_0); }
};

/// Circular Gaussian seeds, E|q|^2 = sigma^2, drawn from the counter-derived
/// substream (rng_seed, trial_index).
inline TrialSeed make_trial_seed(std::uint64_t rng_seed, std::size_t trial_index,
                                 double noise_sigma, std::size_t spatial_slices = 0) {
    auto engine = rng::make_engine(rng_seed, rng::Stream::trial_noise, trial_index);
    std::normal_distribution<double> normal(0.0, noise_sigma / std::sqrt(2.0));
    auto draw = [&] {
        const double re = normal(engine);
        const double im = normal(engine);
        return cplx{re, im};
    };
    TrialSeed seed;
    seed.trial_index = trial_index;
    seed.q1_0 = draw();
    seed.q2_0 = draw();
    if (spatial_slices > 0) {
        seed.slice_seeds.resize(spatial_slices);
        seed.slice_seeds[0] = {seed.q1_0, seed.q2_0};
        for (std::size_t s = 1; s < spatial_slices; ++s) {
            const cplx a = draw();
            const cplx b = draw();
            seed.slice_seeds[s] = {a, b};
        }
    }
    return seed;
}

inline TrialSeed make_trial_seed(const SimConfig& cfg, std::size_t trial_index) {
    return make_trial_seed(cfg.rng_seed, trial_index, cfg.noise_sigma,
                           cfg.spatial_noise ? cfg.grid.n_x + 1 : 0);
}

struct TrialResult {
    std::size_t trial_index = 0;
    double E_S1 = 0.0;
    double E_S2 = 0.0;
    /// Empty when the Stokes output is below the asymmetry floor.
    std::optional<double> asymmetry;
    double conservation_residual = 0.0;
    cplx q1_0;
    cplx q2_0;

    friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

/// (E1 - E2) / (E1 + E2).
inline double mode_asymmetry(double e1, double e2) {
    if (!(e1 >= 0.0) || !(e2 >= 0.0))
        throw ParameterError("mode energies must be nonnegative");
    const double sum = e1 + e2;
    if (sum == 0.0) throw UndefinedAsymmetryError("mode asymmetry undefined for E1 + E2 == 0");
    return std::clamp((e1 - e2) / sum, -1.0, 1.0);
}

/// Pump envelope for a double-blob spec: time domain, energy pump_scale^2.
inline ComplexEnvelope make_pump(const DoubleBlobSpec& blob, const GridSpec& grid,
                                 double pump_scale) {
    auto pump = to_time(make_double_blob(blob, grid));
    pump *= pump_scale;
    return pump;
}

/// One propagation from the given seeds; energies are tau-integrated Stokes
/// intensities at x_max.
inline TrialResult run_trial(const ComplexEnvelope& pump, const TrialSeed& seed,
                             const SimConfig& cfg) {
    cfg.validate();
    TwoModeResult r = [&] {
        try {
            return integrate_two_mode(pump, {seed.q1_0, seed.q2_0}, cfg, seed.slice_seeds);
        } catch (const Error& e) {
            throw TrialError("trial " + std::to_string(seed.trial_index) + ": " + e.what(),
                             seed.trial_index);
        }
    }();
    TrialResult out;
    out.trial_index = seed.trial_index;
    out.E_S1 = pulse_energy(r.output.eps_S1);
    out.E_S2 = pulse_energy(r.output.eps_S2);
    out.conservation_residual = conservation_residual(r.input, r.output);
    out.q1_0 = seed.q1_0;
    out.q2_0 = seed.q2_0;
    const double sum = out.E_S1 + out.E_S2;
    if (sum > kAsymmetryFloor * pulse_energy(pump)) out.asymmetry = mode_asymmetry(out.E_S1, out.E_S2);
    return out;
}

// ---------------------------------------------------------------------------
// Ensembles

/// Mean and standard error of the defined asymmetries in a set of trials.
struct EnsembleStats {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n_effective = 0;
    std::size_t dropouts = 0;
    double median_stokes_fraction = 0.0;  ///< median (E_S1 + E_S2) / pump energy
};

inline EnsembleStats summarize(const std::vector<TrialResult>& trials, double pump_energy) {
    EnsembleStats s;
    std::vector<double> a;
    std::vector<double> frac;
    for (const auto& t : trials) {
        frac.push_back((t.E_S1 + t.E_S2) / pump_energy);
        if (t.asymmetry) a.push_back(*t.asymmetry);
        else ++s.dropouts;
    }
    s.n_effective = a.size();
    if (!a.empty()) {
        double sum = 0.0;
        for (double v : a) sum += v;
        s.mean = sum / static_cast<double>(a.size());
        if (a.size() > 1) {
            double ss = 0.0;
            for (double v : a) ss += (v - s.mean) * (v - s.mean);
            s.stderr_ = std::sqrt(ss / static_cast<double>(a.size() - 1) /
                                  static_cast<double>(a.size()));
        }
    }
    if (!frac.empty()) {
        auto mid = frac.begin() + static_cast<std::ptrdiff_t>(frac.size() / 2);
        std::nth_element(frac.begin(), mid, frac.end());
        s.median_stokes_fraction = *mid;
    }
    return s;
}

struct EnsembleOptions {
    std::size_t threads = 1;
    /// Fraction of failed (erroring) trials tolerated before aborting.
    double max_failure_fraction = 0.0;
};

namespace detail {

/// Runs fn(i) for i in [0, n) on `threads` workers; results land at index i
/// regardless of scheduling. The first exception is rethrown after join.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Trials 0 .. n_trials-1 of `cfg` against one pump. Failed trials are
/// recorded as dropouts up to the tolerated fraction.
inline std::vector<TrialResult> run_ensemble(const ComplexEnvelope& pump, std::size_t n_trials,
                                             const SimConfig& cfg,
                                             const EnsembleOptions& opts = {},
                                             std::uint64_t seed_master = 0,
                                             bool use_seed_master = false) {
    std::vector<TrialResult> out(n_trials);
    std::vector<char> failed(n_trials, 0);
    std::vector<std::string> messages(n_trials);
    detail::parallel_for(n_trials, opts.threads, [&](std::size_t i) {
        TrialSeed seed = use_seed_master
                             ? make_trial_seed(seed_master, i, cfg.noise_sigma,
                                               cfg.spatial_noise ? cfg.grid.n_x + 1 : 0)
                             : make_trial_seed(cfg, i);
        try {
            out[i] = run_trial(pump, seed, cfg);
        } catch (const TrialError& e) {
            failed[i] = 1;
            messages[i] = e.what();
            out[i].trial_index = i;
        }
    });
    std::size_t n_failed = 0;
    std::size_t first_failed = n_trials;
    for (std::size_t i = 0; i < n_trials; ++i)
        if (failed[i]) {
            ++n_failed;
            first_failed = std::min(first_failed, i);
        }
    if (n_failed > 0 &&
        static_cast<double>(n_failed) > opts.max_failure_fraction * static_cast<double>(n_trials))
        throw TrialError(std::to_string(n_failed) + " of " + std::to_string(n_trials) +
                             " trials failed; first: " + messages[first_failed],
                         first_failed);
    return out;
}

// ---------------------------------------------------------------------------
// Phase scans

struct PhaseScanResult {
    std::vector<double> phases;
    std::vector<double> mean_asymmetry;
    std::vector<double> stderr_asymmetry;
    std::vector<std::size_t> n_effective;
    std::vector<std::size_t> dropouts;
    std::vector<double> median_stokes_fraction;
    std::size_t n_trials = 0;
    DoubleBlobSpec blob;
    GridSpec grid;
    SimConfig config;
    /// per_trial[p][i]: asymmetry of trial i at phase p (NaN if undefined).
    std::vector<std::vector<double>> per_trial;

    double peak_to_peak() const {
        if (mean_asymmetry.empty()) return 0.0;
        const auto [lo, hi] = std::minmax_element(mean_asymmetry.begin(), mean_asymmetry.end());
        return *hi - *lo;
    }
};

/// `n` phases evenly spaced over [0, 2 pi).
inline std::vector<double> default_phases(std::size_t n) {
    std::vector<double> p(n);
    for (std::size_t k = 0; k < n; ++k)
        p[k] = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    return p;
}

/// Mean asymmetry versus the inter-blob phase. The same seed sequence is
/// reused at every phase, so curves differ only through the phase.
inline PhaseScanResult phase_scan(const DoubleBlobSpec& blob_template,
                                  const std::vector<double>& phases, std::size_t n_trials,
                                  const SimConfig& cfg, const GridSpec& grid,
                                  const EnsembleOptions& opts = {}) {
    if (n_trials < 1) throw ParameterError("phase_scan needs n_trials >= 1");
    if (phases.empty()) throw ParameterError("phase_scan needs at least one phase");
    cfg.validate();
    PhaseScanResult res;
    res.phases = phases;
    res.n_trials = n_trials;
    res.blob = blob_template;
    res.grid = grid;
    res.config = cfg;
    for (double phi : phases) {
        DoubleBlobSpec blob = blob_template;
        blob.phase_offset = phi;
        const auto pump = make_pump(blob, grid, cfg.pump_scale);
        const auto trials = run_ensemble(pump, n_trials, cfg, opts);
        const auto stats = summarize(trials, pulse_energy(pump));
        res.mean_asymmetry.push_back(stats.mean);
        res.stderr_asymmetry.push_back(stats.stderr_);
        res.n_effective.push_back(stats.n_effective);
        res.dropouts.push_back(stats.dropouts);
        res.median_stokes_fraction.push_back(stats.median_stokes_fraction);
        std::vector<double> row;
        row.reserve(trials.size());
        for (const auto& t : trials) row.push_back(t.asymmetry.value_or(std::nan("")));
        res.per_trial.push_back(std::move(row));
    }
    return res;
}

/// Least-squares fit a + b cos(phi) + c sin(phi); returns amplitude
/// sqrt(b^2 + c^2) and phase psi with the model a + A cos(phi - psi).
struct CosineFit {
    double offset = 0.0;
    double amplitude = 0.0;
    double phase = 0.0;
};

inline CosineFit fit_cosine(const std::vector<double>& phi, const std::vector<double>& y) {
    if (phi.size() != y.size() || phi.size() < 3)
        throw ParameterError("fit_cosine needs >= 3 matching samples");
    // Normal equations for the 3-parameter linear model.
    double m[3][4] = {};
    for (std::size_t k = 0; k < phi.size(); ++k) {
        const double basis[3] = {1.0, std::cos(phi[k]), std::sin(phi[k])};
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) m[r][c] += basis[r] * basis[c];
            m[r][3] += basis[r] * y[k];
        }
    }
    for (int p = 0; p < 3; ++p) {
        int piv = p;
        for (int r = p + 1; r < 3; ++r)
            if (std::abs(m[r][p]) > std::abs(m[piv][p])) piv = r;
        std::swap(m[p], m[piv]);
        if (std::abs(m[p][p]) < 1e-300) throw ParameterError("fit_cosine: singular phase set");
        for (int r = 0; r < 3; ++r) {
            if (r == p) continue;
            const double f = m[r][p] / m[p][p];
            for (int c = p; c < 4; ++c) m[r][c] -= f * m[p][c];
        }
    }
    const double a = m[0][3] / m[0][0];
    const double b = m[1][3] / m[1][1];
    const double c = m[2][3] / m[2][2];
    return {a, std::hypot(b, c), std::atan2(c, b)};
}

// ---------------------------------------------------------------------------
// Fresnel number

struct FresnelParams {
    double beam_area = 0.0;          ///< m^2
    double stokes_wavelength = 0.0;  ///< m
    double cell_length = 0.0;        ///< m
};

/// F = A / (lambda_S L): number of independent transverse Stokes modes.
inline double fresnel_number(const FresnelParams& p) {
    if (!(p.beam_area > 0.0) || !(p.stokes_wavelength > 0.0) || !(p.cell_length > 0.0))
        throw ParameterError("Fresnel parameters must be positive");
    return p.beam_area / (p.stokes_wavelength * p.cell_length);
}

// ---------------------------------------------------------------------------
// Saturation guard

/// Median Stokes/pump energy ratio the guard aims for, and the band it must
/// land in.
struct SaturationBand {
    double lower = 1e-3;
    double upper = 5e-2;
    double target = 3e-3;
};

struct CalibrationResult {
    double pump_scale = 0.0;
    double median_stokes_fraction = 0.0;
    std::size_t iterations = 0;
};

/// Pilot-ensemble median of (E_S1 + E_S2) / E_pump; divergent runs count as
/// saturated (+inf).
inline double median_stokes_fraction(const DoubleBlobSpec& blob, const GridSpec& grid,
                                     SimConfig cfg, double pump_scale, std::size_t n_pilot,
                                     const EnsembleOptions& opts = {}) {
    cfg.pump_scale = pump_scale;
    const auto pump = make_pump(blob, grid, pump_scale);
    const std::uint64_t master = rng::substream_seed(cfg.rng_seed, rng::Stream::calibration, 0);
    try {
        const auto trials = run_ensemble(pump, n_pilot, cfg, {opts.threads, 0.0}, master, true);
        return summarize(trials, pulse_energy(pump)).median_stokes_fraction;
    } catch (const TrialError&) {
        return std::numeric_limits<double>::infinity();
    }
}

/// Bisects log(pump_scale) until the pilot median hits the target band.
/// Throws if the band cannot be reached within [lo, hi].
inline CalibrationResult calibrate_pump_scale(const DoubleBlobSpec& blob, const GridSpec& grid,
                                              const SimConfig& cfg, std::size_t n_pilot = 16,
                                              SaturationBand band = {},
                                              const EnsembleOptions& opts = {}) {
    cfg.validate();
    double lo = 1e-3;
    double hi = 1e2;
    CalibrationResult best;
    double log_target = std::log(band.target);
    for (std::size_t it = 1; it <= 60; ++it) {
        const double mid = std::sqrt(lo * hi);
        const double frac = median_stokes_fraction(blob, grid, cfg, mid, n_pilot, opts);
        best = {mid, frac, it};
        if (std::isfinite(frac) && frac > 0.0 &&
            std::abs(std::log(frac) - log_target) < 0.05)
            break;
        if (!(frac > 0.0) || (std::isfinite(frac) && std::log(frac) < log_target)) lo = mid;
        else hi = mid;
        if (hi / lo < 1.0 + 1e-9) break;
    }
    if (!(best.median_stokes_fraction >= band.lower && best.median_stokes_fraction <= band.upper))
        throw ParameterError("saturation guard: could not place the median Stokes fraction in [" +
                             std::to_string(band.lower) + ", " + std::to_string(band.upper) +
                             "], got " + std::to_string(best.median_stokes_fraction));
    return best;
}

}  // namespace raman
