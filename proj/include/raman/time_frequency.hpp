#pragma once

// Wigner and Husimi distributions of time-domain envelopes.
//
// Both distributions are sampled on the envelope's time grid and on a
// frequency grid of spacing df/2 spanning +-1/(4 dt); the half spacing comes
// from the lag step 2 dt of the discrete Wigner kernel. Normalization is
// such that sum W dt df_w equals the pulse energy.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "raman/errors.hpp"
#include "raman/fft.hpp"
#include "raman/pulse_shaping.hpp"

namespace raman {

struct TFDistribution {
    std::vector<double> time_axis;  ///< ps
    std::vector<double> freq_axis;  ///< THz, absolute (includes center_frequency)
    std::vector<double> values;     ///< row-major, rows = time

    std::size_t n_times() const { return time_axis.size(); }
    std::size_t n_freqs() const { return freq_axis.size(); }
    double& at(std::size_t it, std::size_t jf) { return values[it * n_freqs() + jf]; }
    double at(std::size_t it, std::size_t jf) const { return values[it * n_freqs() + jf]; }

    double time_step() const { return time_axis.size() > 1 ? time_axis[1] - time_axis[0] : 0.0; }
    double freq_step() const { return freq_axis.size() > 1 ? freq_axis[1] - freq_axis[0] : 0.0; }

    double min_value() const { return *std::min_element(values.begin(), values.end()); }
    double max_value() const { return *std::max_element(values.begin(), values.end()); }
};

namespace detail {

inline TFDistribution empty_distribution(const GridSpec& g) {
    TFDistribution d;
    const std::size_t n = g.n_samples;
    const double dfw = 0.5 * g.df();
    d.time_axis.resize(n);
    d.freq_axis.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        d.time_axis[i] = g.time(i);
        d.freq_axis[i] =
            g.center_frequency + (static_cast<double>(i) - static_cast<double>(n / 2)) * dfw;
    }
    d.values.assign(n * n, 0.0);
    return d;
}

inline void require_time_domain(const ComplexEnvelope& e, const char* who) {
    if (e.domain() != Domain::time)
        throw DomainError(std::string(who) + " expects a time-domain envelope");
}

}  // namespace detail

/// Imaginary residue tolerated in wigner(), relative to the peak |W|.
inline constexpr double kWignerImagTolerance = 1e-10;

/// Discrete Wigner distribution
///   W(t_n, f_j) = 2 dt sum_m e[n+m] conj(e[n-m]) exp(-2 pi i f_j 2 m dt).
inline TFDistribution wigner(const ComplexEnvelope& input) {
    detail::require_time_domain(input, "wigner");
    const auto& g = input.grid();
    const std::size_t n = g.n_samples;
    const auto half = static_cast<std::ptrdiff_t>(n / 2);
    TFDistribution out = detail::empty_distribution(g);

    std::vector<cplx> row(n);
    double peak = 0.0;
    double worst_imag = 0.0;
    for (std::size_t it = 0; it < n; ++it) {
        const auto t = static_cast<std::ptrdiff_t>(it);
        for (std::ptrdiff_t m = -half; m < half; ++m) {
            const std::ptrdiff_t a = t + m;
            const std::ptrdiff_t b = t - m;
            const bool inside = a >= 0 && b >= 0 && a < static_cast<std::ptrdiff_t>(n) &&
                                b < static_cast<std::ptrdiff_t>(n);
            row[static_cast<std::size_t>(m + half)] =
                inside ? input[static_cast<std::size_t>(a)] *
                             std::conj(input[static_cast<std::size_t>(b)])
                       : cplx{};
        }
        detail::centered_dft_inplace(row, detail::FftSign::forward);
        for (std::size_t j = 0; j < n; ++j) {
            const cplx w = 2.0 * g.dt * row[j];
            out.at(it, j) = w.real();
            peak = std::max(peak, std::abs(w.real()));
            worst_imag = std::max(worst_imag, std::abs(w.imag()));
        }
    }
    if (peak > 0.0 && worst_imag > kWignerImagTolerance * peak)
        throw Error("wigner: imaginary residue " + std::to_string(worst_imag / peak) +
                    " of peak exceeds tolerance");
    return out;
}

/// Default time smoothing for the Husimi distribution, ps.
inline constexpr double kDefaultHusimiSigmaT = 0.25;

/// Husimi distribution: the Wigner distribution convolved with a 2-D
/// Gaussian of rms widths sigma_t (ps) and sigma_f = 1/(4 pi sigma_t) (THz),
/// i.e. sigma_t * sigma_omega = 1/2.
///
/// Evaluated through the equivalent Gaussian-window short-time transform,
/// |int e(s) g(s - t) exp(-2 pi i f s) ds|^2, which is nonnegative by
/// construction.
inline TFDistribution husimi(const ComplexEnvelope& input,
                             double sigma_t = kDefaultHusimiSigmaT) {
    detail::require_time_domain(input, "husimi");
    if (!(sigma_t > 0.0)) throw ParameterError("husimi: sigma_t must be positive");
    const auto& g = input.grid();
    const std::size_t n = g.n_samples;
    TFDistribution out = detail::empty_distribution(g);

    // |window|^2 has variance sigma_t^2 and unit integral.
    const double a2 = 2.0 * sigma_t * sigma_t;
    const double norm = std::pow(std::numbers::pi * a2, -0.25);

    // Zero-padded to 2N so the transform lands on the df/2 grid; bins
    // N/2 .. 3N/2 of the centered 2N transform cover +-1/(4 dt).
    std::vector<cplx> buf(2 * n);
    for (std::size_t it = 0; it < n; ++it) {
        const double t0 = g.time(it);
        std::fill(buf.begin(), buf.end(), cplx{});
        for (std::size_t s = 0; s < n; ++s) {
            const double u = g.time(s) - t0;
            const double w = norm * std::exp(-0.5 * u * u / a2);
            buf[s + n / 2] = input[s] * w;
        }
        detail::centered_dft_inplace(buf, detail::FftSign::forward);
        for (std::size_t j = 0; j < n; ++j)
            out.at(it, j) = std::norm(buf[j + n / 2] * g.dt);
    }
    return out;
}

/// Keep every `stride`-th row and column.
inline TFDistribution downsample(const TFDistribution& d, std::size_t stride) {
    if (stride == 0) throw ParameterError("downsample stride must be >= 1");
    TFDistribution out;
    for (std::size_t i = 0; i < d.n_times(); i += stride) out.time_axis.push_back(d.time_axis[i]);
    for (std::size_t j = 0; j < d.n_freqs(); j += stride) out.freq_axis.push_back(d.freq_axis[j]);
    out.values.reserve(out.n_times() * out.n_freqs());
    for (std::size_t i = 0; i < d.n_times(); i += stride)
        for (std::size_t j = 0; j < d.n_freqs(); j += stride) out.values.push_back(d.at(i, j));
    return out;
}

/// Long-format CSV: t,f,value.
inline void write_distribution_csv(std::ostream& os, const TFDistribution& d) {
    os << "t,f,value\n";
    char line[96];
    for (std::size_t i = 0; i < d.n_times(); ++i)
        for (std::size_t j = 0; j < d.n_freqs(); ++j) {
            std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", d.time_axis[i],
                          d.freq_axis[j], d.at(i, j));
            os << line;
        }
}

}  // namespace raman
