#pragma once

// Independent reference computations and the invariant suite behind the
// `validate` subcommand.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "raman/experiments.hpp"
#include "raman/pulse_shaping.hpp"
#include "raman/rng.hpp"
#include "raman/srs_solver.hpp"
#include "raman/time_frequency.hpp"

namespace raman::oracle {

/// Small-signal Stokes field of the single-mode equations under a constant
/// pump A0 with seed q0, at reduced distance x and time tau after the seed:
///   q0* A0 sum_n x^{n+1} kappa^n tau^n / (n! (n+1)!),  kappa = |A0|^2 / 4.
inline cplx bessel_stokes(cplx q0, cplx a0, double x, double tau) {
    const double kappa = 0.25 * std::norm(a0);
    const double z = kappa * x * tau;
    double term = x;  // n = 0
    double sum = term;
    for (int n = 1; n < 400; ++n) {
        term *= z / (static_cast<double>(n) * static_cast<double>(n + 1));
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return std::conj(q0) * a0 * sum;
}

/// Same quantity through the modified Bessel function,
/// q0* A0 sqrt(x / (kappa tau)) I1(2 sqrt(kappa x tau)).
inline cplx bessel_stokes_closed(cplx q0, cplx a0, double x, double tau) {
    const double kappa = 0.25 * std::norm(a0);
    if (tau == 0.0 || kappa == 0.0) return std::conj(q0) * a0 * x;
    return std::conj(q0) * a0 * std::sqrt(x / (kappa * tau)) *
           std::cyl_bessel_i(1.0, 2.0 * std::sqrt(kappa * x * tau));
}

/// Direct O(N^2) evaluation of the centered continuous-scaled forward
/// transform, E(f_k) = sum_n e(t_n) exp(-2 pi i f_k t_n) dt.
inline std::vector<cplx> direct_forward(const ComplexEnvelope& e) {
    const auto& g = e.grid();
    const std::size_t n = g.n_samples;
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc{};
        const double f = g.frequency_offset(k);
        for (std::size_t j = 0; j < n; ++j)
            acc += e[j] * std::polar(1.0, -2.0 * std::numbers::pi * f * g.time(j));
        out[k] = acc * g.dt;
    }
    return out;
}

}  // namespace raman::oracle

namespace raman {

struct CheckResult {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

namespace detail {

inline CheckResult le_check(std::string name, double value, double tol) {
    return {std::move(name), value, tol, value <= tol};
}

inline ComplexEnvelope random_time_envelope(const GridSpec& g, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    ComplexEnvelope e(g, Domain::time);
    for (std::size_t j = 0; j < e.size(); ++j) e[j] = {normal(rng), normal(rng)};
    return e;
}

inline double max_rel_diff(std::span<const cplx> a, std::span<const cplx> b) {
    double worst = 0.0;
    double peak = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
        peak = std::max(peak, std::abs(b[i]));
    }
    return peak > 0.0 ? worst / peak : worst;
}

}  // namespace detail

/// Transform round trip and Parseval on a random envelope, and agreement
/// with a direct DFT.
inline std::vector<CheckResult> check_transforms(const GridSpec& g, std::uint64_t seed) {
    auto rng = rng::make_engine(seed, rng::Stream::property_test, 0);
    const auto e = detail::random_time_envelope(g, rng);
    const auto f = to_frequency(e);
    const auto back = to_time(f);
    const double parseval = std::abs(pulse_energy(f) - pulse_energy(e)) / pulse_energy(e);
    const auto direct = oracle::direct_forward(e);
    return {detail::le_check("transform round trip", detail::max_rel_diff(back.samples(), e.samples()), 1e-12),
            detail::le_check("Parseval", parseval, 1e-12),
            detail::le_check("FFT vs direct DFT", detail::max_rel_diff(f.samples(), direct), 1e-12)};
}

/// Wigner marginals of a double blob against |e(t)|^2 and |E(f)|^2.
inline std::vector<CheckResult> check_wigner(const GridSpec& g, const DoubleBlobSpec& blob) {
    const auto spec = make_double_blob(blob, g);
    const auto e = to_time(spec);
    const auto w = wigner(e);
    const double dfw = w.freq_step();
    double t_err = 0.0, t_peak = 0.0;
    for (std::size_t i = 0; i < w.n_times(); ++i) {
        double m = 0.0;
        for (std::size_t j = 0; j < w.n_freqs(); ++j) m += w.at(i, j) * dfw;
        t_err = std::max(t_err, std::abs(m - std::norm(e[i])));
        t_peak = std::max(t_peak, std::norm(e[i]));
    }
    // Frequency marginal lands on the df/2 grid; even columns are the
    // envelope's own bins.
    double f_err = 0.0, f_peak = 0.0;
    const std::size_t n = g.n_samples;
    for (std::size_t j = 0; j < n; j += 2) {
        double m = 0.0;
        for (std::size_t i = 0; i < w.n_times(); ++i) m += w.at(i, j) * g.dt;
        const auto kk = static_cast<std::ptrdiff_t>(n / 2) +
                        (static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(n / 2)) / 2;
        const double ref = std::norm(spec[static_cast<std::size_t>(kk)]);
        f_err = std::max(f_err, std::abs(m - ref));
        f_peak = std::max(f_peak, ref);
    }
    double total = 0.0;
    for (double v : w.values) total += v;
    total *= g.dt * dfw;
    return {detail::le_check("Wigner time marginal", t_err / t_peak, 1e-8),
            detail::le_check("Wigner frequency marginal", f_err / f_peak, 1e-8),
            detail::le_check("Wigner total energy", std::abs(total - pulse_energy(e)) / pulse_energy(e), 1e-8)};
}

/// Constant pump A0 over the window, seed q0 at the leading edge; compares
/// the solver's Stokes output with the series oracle. Returns the max error
/// relative to the max oracle magnitude.
inline double bessel_oracle_error(const GridSpec& g, const SolverGrid& sg, cplx a0, cplx q0) {
    ComplexEnvelope pump(g, Domain::time, std::vector<cplx>(g.n_samples, a0));
    const auto [fields, medium] = integrate_single_mode(pump, q0, sg);
    std::vector<cplx> ref(g.n_samples);
    for (std::size_t j = 0; j < g.n_samples; ++j)
        ref[j] = oracle::bessel_stokes(q0, a0, sg.x_max, g.time(j) - g.time(0));
    return detail::max_rel_diff(fields.eps_S.samples(), ref);
}

/// alpha = 0, q3 suppressed, w = -1/4: each Stokes mode equals a single-mode
/// run seeded with the same coherence.
inline double decoupling_error(const ComplexEnvelope& pump, std::pair<cplx, cplx> seeds,
                               SimConfig cfg) {
    cfg.alpha = 0.0;
    cfg.suppress_q3 = true;
    cfg.w1 = cfg.w2 = -0.25;
    cfg.delta = 0.0;
    const auto two = integrate_two_mode(pump, seeds, cfg);
    const auto one_a = integrate_single_mode(pump, seeds.first, cfg.grid).first;
    const auto one_b = integrate_single_mode(pump, seeds.second, cfg.grid).first;
    double worst = 0.0;
    for (const auto& [x, y] : {std::pair{&two.output.eps_S1, &one_a.eps_S},
                               std::pair{&two.output.eps_S2, &one_b.eps_S}})
        if (pulse_energy(*y) > 0.0) worst = std::max(worst, detail::max_rel_diff(x->samples(), y->samples()));
    return worst;
}

/// Default tolerances of the invariant suite.
struct ValidationTolerances {
    double conservation = 1e-6;
    double bessel = 1e-4;
    double decoupling = 1e-10;
};

/// Grid and solver settings of the Bessel check: constant unit pump,
/// kappa x_max tau_max just under 9 on the default window.
inline SolverGrid bessel_solver_grid() { return {256, 3.5}; }

inline std::vector<CheckResult> run_validation_suite(const SimConfig& cfg, const GridSpec& grid,
                                                     const DoubleBlobSpec& blob,
                                                     const ValidationTolerances& tol = {}) {
    std::vector<CheckResult> out = check_transforms(grid, cfg.rng_seed);
    for (auto& c : check_wigner(grid, blob)) out.push_back(std::move(c));

    {
        auto rng = rng::make_engine(cfg.rng_seed, rng::Stream::property_test, 1);
        double worst = 0.0;
        for (int k = 0; k < 8; ++k) {
            const auto h = husimi(detail::random_time_envelope(grid, rng));
            worst = std::min(worst, h.min_value());
        }
        out.push_back({"Husimi minimum (random envelopes)", worst, -1e-12, worst >= -1e-12});
    }

    const auto pump = make_pump(blob, grid, cfg.pump_scale);
    {
        double worst = 0.0;
        for (std::size_t i = 0; i < 8; ++i)
            worst = std::max(worst, run_trial(pump, make_trial_seed(cfg, i), cfg).conservation_residual);
        out.push_back(detail::le_check("conservation residual", worst, tol.conservation));
    }
    out.push_back(detail::le_check("Bessel oracle",
                                   bessel_oracle_error(grid, bessel_solver_grid(), {1.0, 0.0}, {1e-6, 0.0}),
                                   tol.bessel));
    const auto seed = make_trial_seed(cfg, 0);
    out.push_back(detail::le_check("decoupling", decoupling_error(pump, {seed.q1_0, seed.q2_0}, cfg),
                                   tol.decoupling));
    return out;
}

}  // namespace raman
