#pragma once

// Shaped pump envelopes on a uniform time/frequency grid.
//
// Both domains use centered indexing: sample N/2 sits at t = 0 (time) or at
// the rotating-frame center (frequency). Transforms use the continuous
// Fourier convention
//
//   E(f) = sum_n e(t_n) exp(-2 pi i f t_n) dt,   e(t) = sum_k E(f_k) exp(2 pi i f_k t) df
//
// so that sum |e|^2 dt == sum |E|^2 df.

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "raman/errors.hpp"
#include "raman/fft.hpp"

namespace raman {

using cplx = std::complex<double>;

/// Widest spectral mask the grid must be able to carry, THz.
inline constexpr double kMinMaskBandwidthTHz = 5.0;

/// Uniform sampling grid. Times in ps, frequencies in THz.
struct GridSpec {
    std::size_t n_samples = 1024;
    double dt = 0.01;
    double center_frequency = 0.0;

    double df() const { return 1.0 / (static_cast<double>(n_samples) * dt); }
    double window() const { return static_cast<double>(n_samples) * dt; }
    double nyquist() const { return 0.5 / dt; }

    double time(std::size_t n) const {
        return (static_cast<double>(n) - static_cast<double>(n_samples / 2)) * dt;
    }
    /// Offset from the rotating-frame center (not including center_frequency).
    double frequency_offset(std::size_t k) const {
        return (static_cast<double>(k) - static_cast<double>(n_samples / 2)) * df();
    }
    double frequency(std::size_t k) const { return center_frequency + frequency_offset(k); }

    /// Throws ParameterError on the first violated invariant.
    void validate() const {
        if (n_samples < 64 || (n_samples & (n_samples - 1)) != 0)
            throw ParameterError("n_samples must be a power of two >= 64, got " +
                                 std::to_string(n_samples));
        if (!(dt > 0.0) || !std::isfinite(dt))
            throw ParameterError("dt must be positive");
        if (nyquist() < kMinMaskBandwidthTHz)
            throw ParameterError("Nyquist bandwidth " + std::to_string(nyquist()) +
                                 " THz is below the required mask bandwidth");
    }

    /// A pulse of the given duration needs a window at least four times longer.
    void require_window_for(double pulse_duration) const {
        if (window() < 4.0 * pulse_duration)
            throw GridMismatchError("time window " + std::to_string(window()) +
                                    " ps is shorter than 4x the pulse duration " +
                                    std::to_string(pulse_duration) + " ps");
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

enum class Domain { time, frequency };

inline const char* to_string(Domain d) { return d == Domain::time ? "time" : "frequency"; }

/// Complex field samples on a grid, tagged with the domain they live in.
class ComplexEnvelope {
public:
    ComplexEnvelope(GridSpec grid, Domain domain)
        : grid_(grid), domain_(domain), samples_(grid.n_samples) {}

    ComplexEnvelope(GridSpec grid, Domain domain, std::vector<cplx> samples)
        : grid_(grid), domain_(domain), samples_(std::move(samples)) {
        if (samples_.size() != grid_.n_samples)
            throw GridMismatchError("envelope has " + std::to_string(samples_.size()) +
                                    " samples, grid expects " +
                                    std::to_string(grid_.n_samples));
    }

    const GridSpec& grid() const { return grid_; }
    Domain domain() const { return domain_; }
    std::size_t size() const { return samples_.size(); }

    std::span<const cplx> samples() const { return samples_; }
    std::span<cplx> samples() { return samples_; }
    const cplx& operator[](std::size_t i) const { return samples_[i]; }
    cplx& operator[](std::size_t i) { return samples_[i]; }

    /// Sample spacing in this envelope's domain.
    double step() const { return domain_ == Domain::time ? grid_.dt : grid_.df(); }

    /// Time (ps) or frequency (THz) coordinate of sample i.
    double coordinate(std::size_t i) const {
        return domain_ == Domain::time ? grid_.time(i) : grid_.frequency(i);
    }

    ComplexEnvelope& operator*=(cplx factor) {
        for (auto& s : samples_) s *= factor;
        return *this;
    }

private:
    GridSpec grid_;
    Domain domain_;
    std::vector<cplx> samples_;
};

/// Spectral amplitude/phase filter, one entry per frequency bin.
struct ShaperMask {
    std::vector<double> amplitudes;
    std::vector<double> phases;

    static ShaperMask identity(std::size_t n) {
        return {std::vector<double>(n, 1.0), std::vector<double>(n, 0.0)};
    }

    void validate(std::size_t n_bins) const {
        if (amplitudes.size() != n_bins || phases.size() != n_bins)
            throw GridMismatchError("mask length does not match grid");
        for (double a : amplitudes)
            if (!(a >= 0.0 && a <= 1.0))
                throw ParameterError("mask amplitude outside [0, 1]");
    }
};

/// Two Gaussian spectral lobes at -separation/2 and +separation/2; the upper
/// lobe carries amplitude_ratio and the relative phase.
struct DoubleBlobSpec {
    double blob_width = 0.5;       ///< intensity FWHM of each lobe, THz
    double separation = 3.3;       ///< THz
    double phase_offset = 0.0;     ///< radians
    double amplitude_ratio = 1.0;  ///< upper lobe relative to lower

    /// Intensity FWHM of one transform-limited lobe in time, ps.
    double blob_duration() const { return 2.0 * std::numbers::ln2 / (std::numbers::pi * blob_width); }
};

/// Transform between domains. Throws DomainError if `input` is already in
/// the target domain.
inline ComplexEnvelope to_time(const ComplexEnvelope& input) {
    if (input.domain() != Domain::frequency)
        throw DomainError("to_time expects a frequency-domain envelope");
    ComplexEnvelope out(input.grid(), Domain::time,
                        std::vector<cplx>(input.samples().begin(), input.samples().end()));
    detail::centered_dft_inplace(out.samples(), detail::FftSign::backward);
    out *= input.grid().df();
    return out;
}

inline ComplexEnvelope to_frequency(const ComplexEnvelope& input) {
    if (input.domain() != Domain::time)
        throw DomainError("to_frequency expects a time-domain envelope");
    ComplexEnvelope out(input.grid(), Domain::frequency,
                        std::vector<cplx>(input.samples().begin(), input.samples().end()));
    detail::centered_dft_inplace(out.samples(), detail::FftSign::forward);
    out *= input.grid().dt;
    return out;
}

/// sum |s|^2 times the sample step of the envelope's own domain.
inline double pulse_energy(const ComplexEnvelope& input) {
    double acc = 0.0;
    for (const auto& s : input.samples()) acc += std::norm(s);
    return acc * input.step();
}

inline ComplexEnvelope apply_mask(const ComplexEnvelope& input, const ShaperMask& mask) {
    if (input.domain() != Domain::frequency)
        throw DomainError("masks act on frequency-domain envelopes");
    mask.validate(input.size());
    ComplexEnvelope out = input;
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] *= mask.amplitudes[k] * std::polar(1.0, mask.phases[k]);
    return out;
}

/// Double-blob spectrum normalized to unit energy.
inline ComplexEnvelope make_double_blob(const DoubleBlobSpec& spec, const GridSpec& grid) {
    grid.validate();
    if (!(spec.blob_width > 0.0)) throw ParameterError("blob_width must be positive");
    if (!(spec.separation >= 0.0)) throw ParameterError("separation must be nonnegative");
    if (!(spec.amplitude_ratio >= 0.0))
        throw ParameterError("amplitude_ratio must be nonnegative");
    // Lobe support taken as +-2 FWHM around each center.
    if (0.5 * spec.separation + 2.0 * spec.blob_width > grid.nyquist())
        throw GridMismatchError("double-blob bandwidth exceeds the grid Nyquist frequency");
    grid.require_window_for(spec.blob_duration());

    const double a = 2.0 * std::numbers::ln2 / (spec.blob_width * spec.blob_width);
    const auto lobe = [a](double f) { return std::exp(-a * f * f); };
    const cplx upper = spec.amplitude_ratio * std::polar(1.0, spec.phase_offset);
    const double half = 0.5 * spec.separation;

    ComplexEnvelope out(grid, Domain::frequency);
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double f = grid.frequency_offset(k);
        out[k] = lobe(f + half) + upper * lobe(f - half);
    }
    out *= 1.0 / std::sqrt(pulse_energy(out));
    return out;
}

/// Single transform-limited Gaussian lobe at the frame center, unit energy.
inline ComplexEnvelope make_single_blob(double blob_width, const GridSpec& grid) {
    return make_double_blob({blob_width, 0.0, 0.0, 0.0}, grid);
}

/// CSV dump: a `#` header naming domain and grid, then index,t_or_f,re,im.
inline void write_envelope_csv(std::ostream& os, const ComplexEnvelope& env) {
    const auto& g = env.grid();
    char line[160];
    std::snprintf(line, sizeof line,
                  "# domain=%s n_samples=%zu dt=%.17g df=%.17g center_frequency=%.17g\n",
                  to_string(env.domain()), g.n_samples, g.dt, g.df(), g.center_frequency);
    os << line << "index," << (env.domain() == Domain::time ? "t" : "f") << ",re,im\n";
    for (std::size_t i = 0; i < env.size(); ++i) {
        std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g\n", i, env.coordinate(i),
                      env[i].real(), env[i].imag());
        os << line;
    }
}

}  // namespace raman
