#pragma once

// Transient stimulated Raman propagation in reduced coordinates.
//
// Fields e(x, tau) obey  d/dx e = M(q) e  with M anti-Hermitian, so the
// tau-pointwise photon flux sum |e|^2 is independent of x. Coherences obey
// d/dtau q = G(e, q, tau). Boundary data: the fields at x = 0 (pump in,
// Stokes zero) and the coherences at the first tau sample (the seeds).
//
// Scheme, per x slice: fields take an explicit-midpoint step in x using the
// coherences averaged over the slice; coherences take a Heun
// (predictor/trapezoid corrector) step in tau on the new slice. Both are
// second order, so the flux residual falls ~4x per grid doubling.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "raman/errors.hpp"
#include "raman/pulse_shaping.hpp"

namespace raman {

/// Discretization of the reduced propagation coordinate. The tau grid is the
/// pump's time grid.
struct SolverGrid {
    std::size_t n_x = 256;
    double x_max = 1.0;

    double dx() const { return x_max / static_cast<double>(n_x); }

    void validate() const {
        if (n_x < 2) throw ParameterError("solver grid needs n_x >= 2");
        if (!(x_max > 0.0) || !std::isfinite(x_max))
            throw ParameterError("x_max must be positive");
    }
};

/// Parameters of one two-mode propagation.
struct SimConfig {
    double alpha = 7.0;         ///< pump-pump Raman coupling between the modes
    bool suppress_q3 = true;    ///< drop the e1-e2 coherence
    double w1 = -1.0;           ///< population inversion, mode 1
    double w2 = -1.0;           ///< population inversion, mode 2
    double delta = 0.0;         ///< residual detuning of cross-frame terms, rad/ps
    double pump_scale = 1.31;   ///< pump amplitude; pump energy = pump_scale^2
    SolverGrid grid{};
    double noise_sigma = 1e-6;  ///< rms of the circular Gaussian coherence seeds
    std::uint64_t rng_seed = 20020101;
    bool spatial_noise = false;  ///< independent seed per x slice

    void validate() const {
        grid.validate();
        if (!(alpha >= 0.0)) throw ParameterError("alpha must be >= 0");
        if (!(pump_scale > 0.0)) throw ParameterError("pump_scale must be > 0");
        if (!(noise_sigma > 0.0)) throw ParameterError("noise_sigma must be > 0");
        if (!std::isfinite(w1) || !std::isfinite(w2) || !std::isfinite(delta))
            throw ParameterError("w1, w2 and delta must be finite");
    }
};

/// Amplitude growth beyond this multiple of the input scale is reported as
/// a divergence.
inline constexpr double kDivergenceFactor = 1e6;

// ---------------------------------------------------------------------------
// Models

/// Single active mode: fields (pump, Stokes), one coherence.
///   dx eL = -q eS,   dx eS = conj(q) eL,   dtau q = eL conj(eS) / 4
struct SingleModeModel {
    static constexpr std::size_t kFields = 2;
    static constexpr std::size_t kCoherences = 1;
    using Fields = std::array<cplx, kFields>;
    using Coherences = std::array<cplx, kCoherences>;

    Fields field_rhs(const Fields& e, const Coherences& q, double /*tau*/) const {
        return {-q[0] * e[1], std::conj(q[0]) * e[0]};
    }
    Coherences coherence_rhs(const Fields& e, const Coherences& /*q*/, double /*tau*/) const {
        return {0.25 * e[0] * std::conj(e[1])};
    }
};

/// Two Raman modes sharing the ground state, coupled through the pump-pump
/// (alpha), Stokes-Stokes and e1-e2 coherence (q3) channels.
///
/// Fields (eL, eS1, eS2), coherences (q1, q2, q3). Cross-frame factors use
/// c = exp(-i delta tau): the alpha and Stokes-Stokes terms of the q1
/// equation carry c, those of the q2 equation carry conj(c), q3 enters every
/// equation as q3 c, and dtau q3 is multiplied by conj(c). delta = 0 gives
/// the equations exactly as written without frame factors.
struct TwoModeModel {
    static constexpr std::size_t kFields = 3;
    static constexpr std::size_t kCoherences = 3;
    using Fields = std::array<cplx, kFields>;
    using Coherences = std::array<cplx, kCoherences>;

    double alpha = 0.0;
    double w1 = -1.0;
    double w2 = -1.0;
    double delta = 0.0;
    bool suppress_q3 = true;

    cplx frame(double tau) const {
        return delta == 0.0 ? cplx{1.0, 0.0} : std::polar(1.0, -delta * tau);
    }

    Fields field_rhs(const Fields& e, const Coherences& q, double tau) const {
        const auto& [eL, eS1, eS2] = e;
        Fields d{-eS1 * q[0] - eS2 * q[1], eL * std::conj(q[0]), eL * std::conj(q[1])};
        if (!suppress_q3) {
            const cplx q3 = q[2] * frame(tau);
            d[0] += 0.25 * eL * (std::conj(q3) - q3);
            d[1] += 0.25 * eS2 * std::conj(q3);
            d[2] -= 0.25 * eS1 * q3;
        }
        return d;
    }

    Coherences coherence_rhs(const Fields& e, const Coherences& q, double tau) const {
        constexpr cplx i{0.0, 1.0};
        const auto& [eL, eS1, eS2] = e;
        const cplx c = frame(tau);
        const double pump = std::norm(eL);
        const cplx s21 = eS2 * std::conj(eS1);

        Coherences d{
            -w1 * eL * std::conj(eS1) - i * c * (alpha * pump + s21) * q[1],
            -w2 * eL * std::conj(eS2) + i * std::conj(c) * (alpha * pump + std::conj(s21)) * q[0],
            cplx{}};
        if (!suppress_q3) {
            const cplx q3 = q[2] * c;
            d[0] -= i * eL * std::conj(eS2) * q3;
            d[1] -= i * eL * std::conj(eS1) * std::conj(q3);
            d[2] = std::conj(c) * (i * eS2 * std::conj(eL) * q[0] +
                                   i * eL * std::conj(eS1) * std::conj(q[1]) -
                                   (w1 - w2) * (pump + s21));
        }
        return d;
    }
};

// ---------------------------------------------------------------------------
// Generic marcher

/// Boundary data and result storage for one propagation.
template <class Model>
struct Propagation {
    using Fields = typename Model::Fields;
    using Coherences = typename Model::Coherences;

    std::vector<Fields> fields;          ///< on the current x slice, per tau
    std::vector<Coherences> coherences;  ///< on the current x slice, per tau
};

/// Called after every completed x slice (slice 0 is the input boundary).
template <class Model>
using SliceObserver = std::function<void(std::size_t slice, double x, const Propagation<Model>&)>;

namespace detail {

template <std::size_t N>
std::array<cplx, N> axpy(const std::array<cplx, N>& y, double a, const std::array<cplx, N>& x) {
    std::array<cplx, N> out;
    for (std::size_t k = 0; k < N; ++k) out[k] = y[k] + a * x[k];
    return out;
}

template <std::size_t N>
std::array<cplx, N> midpoint(const std::array<cplx, N>& a, const std::array<cplx, N>& b) {
    std::array<cplx, N> out;
    for (std::size_t k = 0; k < N; ++k) out[k] = 0.5 * (a[k] + b[k]);
    return out;
}

template <std::size_t N>
double max_norm(const std::array<cplx, N>& a) {
    double m = 0.0;
    for (const auto& v : a) {
        const double n = std::norm(v);
        if (std::isnan(n)) return n;  // std::max would drop it
        m = std::max(m, n);
    }
    return m;
}

}  // namespace detail

/// March `state` (holding the x = 0 fields for every tau) to x = grid.x_max.
///
/// `seeds(slice)` returns the coherences at the first tau sample of that x
/// slice. On return `state` holds the final slice.
template <class Model, class SeedFn>
void march(const Model& model, const SolverGrid& grid, double tau0, double dtau,
           SeedFn&& seeds, Propagation<Model>& state,
           const SliceObserver<Model>& observer = nullptr) {
    using Fields = typename Model::Fields;
    using Coherences = typename Model::Coherences;
    grid.validate();
    const std::size_t n_tau = state.fields.size();
    const double h = grid.dx();
    const auto tau_at = [&](std::size_t j) { return tau0 + static_cast<double>(j) * dtau; };

    double scale2 = 0.0;
    for (const auto& f : state.fields) scale2 = std::max(scale2, detail::max_norm(f));
    const double limit = kDivergenceFactor * std::sqrt(std::max(scale2, 1.0));
    const double limit2 = limit * limit;

    auto field_step = [&](const Fields& e, const Coherences& q_old, const Coherences& q_new,
                          double tau) {
        const Fields half = detail::axpy(e, 0.5 * h, model.field_rhs(e, q_old, tau));
        return detail::axpy(e, h, model.field_rhs(half, detail::midpoint(q_old, q_new), tau));
    };

    auto check = [&](const Fields& e, const Coherences& q, std::size_t slice) {
        const double m = std::max(detail::max_norm(e), detail::max_norm(q));
        if (!std::isfinite(m))
            throw NumericError("non-finite value at x slice " + std::to_string(slice), slice);
        if (m > limit2)
            throw DivergenceError("amplitude exceeded " + std::to_string(kDivergenceFactor) +
                                      "x the input scale at x slice " + std::to_string(slice),
                                  slice);
    };

    // Coherences on the input slice evolve under the input fields alone.
    state.coherences.assign(n_tau, Coherences{});
    state.coherences[0] = seeds(0);
    for (std::size_t j = 0; j + 1 < n_tau; ++j) {
        const auto& qj = state.coherences[j];
        const auto g0 = model.coherence_rhs(state.fields[j], qj, tau_at(j));
        const auto pred = detail::axpy(qj, dtau, g0);
        const auto g1 = model.coherence_rhs(state.fields[j + 1], pred, tau_at(j + 1));
        auto next = qj;
        for (std::size_t k = 0; k < next.size(); ++k) next[k] += 0.5 * dtau * (g0[k] + g1[k]);
        check(state.fields[j + 1], next, 0);
        state.coherences[j + 1] = next;
    }
    if (observer) observer(0, 0.0, state);

    Propagation<Model> next;
    next.fields.resize(n_tau);
    next.coherences.resize(n_tau);
    for (std::size_t i = 1; i <= grid.n_x; ++i) {
        next.coherences[0] = seeds(i);
        next.fields[0] = field_step(state.fields[0], state.coherences[0], next.coherences[0],
                                    tau_at(0));
        for (std::size_t j = 0; j + 1 < n_tau; ++j) {
            const auto& qj = next.coherences[j];
            const auto g0 = model.coherence_rhs(next.fields[j], qj, tau_at(j));
            const auto q_pred = detail::axpy(qj, dtau, g0);
            const auto e_pred = field_step(state.fields[j + 1], state.coherences[j + 1], q_pred,
                                           tau_at(j + 1));
            const auto g1 = model.coherence_rhs(e_pred, q_pred, tau_at(j + 1));
            auto q_next = qj;
            for (std::size_t k = 0; k < q_next.size(); ++k)
                q_next[k] += 0.5 * dtau * (g0[k] + g1[k]);
            next.coherences[j + 1] = q_next;
            next.fields[j + 1] = field_step(state.fields[j + 1], state.coherences[j + 1],
                                            q_next, tau_at(j + 1));
            check(next.fields[j + 1], q_next, i);
        }
        std::swap(state, next);
        if (observer) observer(i, static_cast<double>(i) * h, state);
    }
}

// ---------------------------------------------------------------------------
// Public integrators

struct SingleModeFields {
    ComplexEnvelope eps_L;
    ComplexEnvelope eps_S;
};

struct SingleModeMedium {
    std::vector<cplx> q;
};

struct FieldState {
    ComplexEnvelope eps_L;
    ComplexEnvelope eps_S1;
    ComplexEnvelope eps_S2;

    /// |eL|^2 + |eS1|^2 + |eS2|^2 at each tau.
    std::vector<double> flux() const {
        std::vector<double> out(eps_L.size());
        for (std::size_t j = 0; j < out.size(); ++j)
            out[j] = std::norm(eps_L[j]) + std::norm(eps_S1[j]) + std::norm(eps_S2[j]);
        return out;
    }
};

struct MediumState {
    std::vector<cplx> q1, q2, q3;
    double w1 = -1.0;
    double w2 = -1.0;
};

struct TwoModeResult {
    FieldState input;  ///< x = 0
    FieldState output;  ///< x = x_max
    MediumState medium;  ///< coherences on the final slice
};

namespace detail {

inline void require_time_pump(const ComplexEnvelope& pump) {
    if (pump.domain() != Domain::time)
        throw DomainError("the solver propagates time-domain pump envelopes");
}

inline ComplexEnvelope channel(const GridSpec& g, std::vector<cplx> v) {
    return ComplexEnvelope(g, Domain::time, std::move(v));
}

template <std::size_t N, std::size_t M>
std::vector<cplx> extract(const std::vector<std::array<cplx, M>>& v) {
    std::vector<cplx> out(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) out[j] = v[j][N];
    return out;
}

}  // namespace detail

/// Single-mode transient SRS from x = 0 to x = grid.x_max. The Stokes input
/// is zero and q(x, tau_0) = q0 for every x.
inline std::pair<SingleModeFields, SingleModeMedium> integrate_single_mode(
    const ComplexEnvelope& pump, cplx q0, const SolverGrid& grid,
    const SliceObserver<SingleModeModel>& observer = nullptr) {
    detail::require_time_pump(pump);
    const auto& g = pump.grid();
    Propagation<SingleModeModel> state;
    state.fields.resize(pump.size());
    for (std::size_t j = 0; j < pump.size(); ++j) state.fields[j] = {pump[j], cplx{}};
    march(SingleModeModel{}, grid, g.time(0), g.dt,
          [q0](std::size_t) { return SingleModeModel::Coherences{q0}; }, state, observer);
    return {SingleModeFields{detail::channel(g, detail::extract<0>(state.fields)),
                             detail::channel(g, detail::extract<1>(state.fields))},
            SingleModeMedium{detail::extract<0>(state.coherences)}};
}

inline TwoModeModel make_two_mode_model(const SimConfig& cfg) {
    return TwoModeModel{cfg.alpha, cfg.w1, cfg.w2, cfg.delta, cfg.suppress_q3};
}

/// Two-mode propagation. `slice_seeds`, when given, supplies (q1, q2) at the
/// first tau sample for every x slice (n_x + 1 entries); otherwise `seeds`
/// is used on every slice. q3 starts at zero.
inline TwoModeResult integrate_two_mode(
    const ComplexEnvelope& pump, std::pair<cplx, cplx> seeds, const SimConfig& cfg,
    std::span<const std::pair<cplx, cplx>> slice_seeds = {},
    const SliceObserver<TwoModeModel>& observer = nullptr) {
    detail::require_time_pump(pump);
    cfg.grid.validate();
    if (!slice_seeds.empty() && slice_seeds.size() != cfg.grid.n_x + 1)
        throw GridMismatchError("per-slice seeds must cover n_x + 1 slices");
    const auto& g = pump.grid();
    Propagation<TwoModeModel> state;
    state.fields.resize(pump.size());
    for (std::size_t j = 0; j < pump.size(); ++j) state.fields[j] = {pump[j], cplx{}, cplx{}};

    FieldState input{pump, detail::channel(g, std::vector<cplx>(pump.size())),
                     detail::channel(g, std::vector<cplx>(pump.size()))};

    auto seed_fn = [&](std::size_t slice) {
        const auto& s = slice_seeds.empty() ? seeds : slice_seeds[slice];
        return TwoModeModel::Coherences{s.first, s.second, cplx{}};
    };
    march(make_two_mode_model(cfg), cfg.grid, g.time(0), g.dt, seed_fn, state, observer);

    return TwoModeResult{
        std::move(input),
        FieldState{detail::channel(g, detail::extract<0>(state.fields)),
                   detail::channel(g, detail::extract<1>(state.fields)),
                   detail::channel(g, detail::extract<2>(state.fields))},
        MediumState{detail::extract<0>(state.coherences), detail::extract<1>(state.coherences),
                    detail::extract<2>(state.coherences), cfg.w1, cfg.w2}};
}

/// max_tau |I(x_max) - I(0)| / max_tau I(0), I the total photon flux.
inline double conservation_residual(const FieldState& at_input, const FieldState& at_output) {
    if (at_input.eps_L.size() != at_output.eps_L.size() ||
        !(at_input.eps_L.grid() == at_output.eps_L.grid()))
        throw GridMismatchError("conservation_residual: grids differ");
    const auto i0 = at_input.flux();
    const auto i1 = at_output.flux();
    double peak = 0.0;
    double worst = 0.0;
    for (std::size_t j = 0; j < i0.size(); ++j) {
        peak = std::max(peak, i0[j]);
        worst = std::max(worst, std::abs(i1[j] - i0[j]));
    }
    return peak > 0.0 ? worst / peak : worst;
}

/// Snapshot CSV for one x slice: tau, then re/im of every field and coherence.
inline void write_two_mode_snapshot_csv(std::ostream& os, std::size_t slice, double x,
                                        const Propagation<TwoModeModel>& p, double tau0,
                                        double dtau) {
    char line[512];
    std::snprintf(line, sizeof line, "# slice=%zu x=%.17g\n", slice, x);
    os << line
       << "tau,eL_re,eL_im,eS1_re,eS1_im,eS2_re,eS2_im,q1_re,q1_im,q2_re,q2_im,q3_re,q3_im\n";
    for (std::size_t j = 0; j < p.fields.size(); ++j) {
        const auto& e = p.fields[j];
        const auto& q = p.coherences[j];
        std::snprintf(line, sizeof line,
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                      "%.17g\n",
                      tau0 + static_cast<double>(j) * dtau, e[0].real(), e[0].imag(),
                      e[1].real(), e[1].imag(), e[2].real(), e[2].imag(), q[0].real(),
                      q[0].imag(), q[1].real(), q[1].imag(), q[2].real(), q[2].imag());
        os << line;
    }
}

}  // namespace raman
