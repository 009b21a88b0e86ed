#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include "raman/pulse_shaping.hpp"
#include "raman/rng.hpp"
#include "raman/validation.hpp"

using namespace raman;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double kPi = std::numbers::pi;

/// Phase of the intensity modulation at frequency s: arg of
/// sum I(t) exp(-2 pi i s t) dt.
double beat_phase(const ComplexEnvelope& e, double s) {
    cplx acc{};
    for (std::size_t j = 0; j < e.size(); ++j) {
        const double t = e.coordinate(j);
        acc += std::norm(e[j]) * std::polar(1.0, -2.0 * kPi * s * t);
    }
    return std::arg(acc);
}

double wrap(double a) { return std::remainder(a, 2.0 * kPi); }

/// Intensity FWHM by linear interpolation around the single peak.
double intensity_fwhm(const ComplexEnvelope& e) {
    std::size_t peak = 0;
    for (std::size_t j = 0; j < e.size(); ++j)
        if (std::norm(e[j]) > std::norm(e[peak])) peak = j;
    const double half = 0.5 * std::norm(e[peak]);
    auto cross = [&](int dir) {
        std::size_t j = peak;
        while (std::norm(e[j + dir]) > half) j += dir;
        const double a = std::norm(e[j]), b = std::norm(e[j + dir]);
        return e.coordinate(j) + dir * e.step() * (a - half) / (a - b);
    };
    return cross(+1) - cross(-1);
}

}  // namespace

TEST_CASE("grid spec invariants", "[pulse_shaping]") {
    GridSpec g;
    REQUIRE_NOTHROW(g.validate());
    CHECK(g.window() == Catch::Approx(10.24));
    CHECK(g.nyquist() == Catch::Approx(50.0));
    CHECK(g.time(g.n_samples / 2) == 0.0);
    CHECK(g.frequency_offset(g.n_samples / 2) == 0.0);

    CHECK_THROWS_AS((GridSpec{1000, 0.01}.validate()), ParameterError);
    CHECK_THROWS_AS((GridSpec{32, 0.01}.validate()), ParameterError);
    CHECK_THROWS_AS((GridSpec{1024, 0.2}.validate()), ParameterError);  // Nyquist 2.5 THz
    CHECK_THROWS_AS((GridSpec{1024, -0.01}.validate()), ParameterError);
    CHECK_THROWS_AS(g.require_window_for(3.0), GridMismatchError);
    CHECK_NOTHROW(g.require_window_for(2.5));
}

TEST_CASE("envelope length must match grid", "[pulse_shaping]") {
    CHECK_THROWS_AS(ComplexEnvelope(GridSpec{}, Domain::time, std::vector<cplx>(10)),
                    GridMismatchError);
}

TEST_CASE("double blob: two equal peaks at +-s/2 and unit energy", "[pulse_shaping]") {
    GridSpec g;
    const auto e = make_double_blob({0.5, 3.3, 0.0, 1.0}, g);
    REQUIRE(e.domain() == Domain::frequency);
    CHECK_THAT(pulse_energy(e), WithinAbs(1.0, 1e-12));

    std::size_t lo = 0, hi = g.n_samples / 2;
    for (std::size_t k = 0; k < g.n_samples / 2; ++k)
        if (std::abs(e[k]) > std::abs(e[lo])) lo = k;
    for (std::size_t k = g.n_samples / 2; k < g.n_samples; ++k)
        if (std::abs(e[k]) > std::abs(e[hi])) hi = k;
    CHECK(std::abs(g.frequency_offset(lo) + 1.65) <= 0.5 * g.df());
    CHECK(std::abs(g.frequency_offset(hi) - 1.65) <= 0.5 * g.df());
    CHECK_THAT(std::abs(e[lo]), WithinAbs(std::abs(e[hi]), 1e-12));
}

TEST_CASE("double blob: intensity beats at the separation with phase phi", "[pulse_shaping]") {
    GridSpec g;
    const double s = 3.3;
    for (double phi : {0.0, 0.7, kPi / 2, kPi, 4.0, 5.9}) {
        const auto t = to_time(make_double_blob({0.5, s, phi, 1.0}, g));
        CHECK(std::abs(wrap(beat_phase(t, s) - phi)) <= 1e-6);
    }
    // Beat period 1/s, and phi = pi shifts the modulation by half a period.
    const auto t0 = to_time(make_double_blob({0.5, s, 0.0, 1.0}, g));
    const auto tp = to_time(make_double_blob({0.5, s, kPi, 1.0}, g));
    const double lag = wrap(beat_phase(tp, s) - beat_phase(t0, s)) / (2.0 * kPi * s);
    CHECK_THAT(std::abs(lag), WithinAbs(0.5 / s, 1e-6));
    CHECK_THAT(0.5 / s, WithinAbs(0.1515, 1e-4));
}

TEST_CASE("double blob: phase offset leaves |E(f)| untouched bin by bin", "[pulse_shaping]") {
    GridSpec g;
    const auto a = make_double_blob({0.5, 3.3, 0.0, 1.0}, g);
    const auto b = make_double_blob({0.5, 3.3, 2.1, 1.0}, g);
    double worst = 0.0;
    double peak = 0.0;
    for (std::size_t k = 0; k < g.n_samples; ++k) {
        worst = std::max(worst, std::abs(std::abs(a[k]) - std::abs(b[k])));
        peak = std::max(peak, std::abs(a[k]));
    }
    // Only the lobe tails overlap, at about 3e-7 of the peak midway.
    CHECK(worst <= 1e-6 * peak);
}

TEST_CASE("amplitude ratio zero gives an unmodulated single blob", "[pulse_shaping]") {
    GridSpec g;
    const auto t = to_time(make_double_blob({0.5, 3.3, 1.0, 0.0}, g));
    cplx beat{};
    double total = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j) {
        beat += std::norm(t[j]) * std::polar(1.0, -2.0 * kPi * 3.3 * t.coordinate(j));
        total += std::norm(t[j]);
    }
    CHECK(std::abs(beat) / total <= 1e-12);
}

TEST_CASE("double blob errors", "[pulse_shaping]") {
    GridSpec g;
    CHECK_THROWS_AS(make_double_blob({0.5, 99.0, 0.0, 1.0}, g), GridMismatchError);
    CHECK_THROWS_AS(make_double_blob({0.0, 3.3, 0.0, 1.0}, g), ParameterError);
    CHECK_THROWS_AS(make_double_blob({0.5, -1.0, 0.0, 1.0}, g), ParameterError);
    CHECK_THROWS_AS(make_double_blob({0.5, 3.3, 0.0, -1.0}, g), ParameterError);
    CHECK_THROWS_AS(make_double_blob({0.01, 3.3, 0.0, 1.0}, g), GridMismatchError);  // 44 ps blob
    CHECK_THROWS_AS(make_double_blob({0.5, 3.3, 0.0, 1.0}, GridSpec{1000, 0.01}), ParameterError);
}

TEST_CASE("apply_mask", "[pulse_shaping]") {
    GridSpec g;
    const auto e = make_double_blob({0.5, 3.3, 0.0, 1.0}, g);

    SECTION("identity mask is exact") {
        const auto out = apply_mask(e, ShaperMask::identity(g.n_samples));
        for (std::size_t k = 0; k < g.n_samples; ++k) CHECK(out[k] == e[k]);
    }
    SECTION("zero amplitudes give zero energy") {
        ShaperMask m{std::vector<double>(g.n_samples, 0.0), std::vector<double>(g.n_samples, 0.0)};
        CHECK(pulse_energy(apply_mask(e, m)) == 0.0);
    }
    SECTION("upper-half phase step reproduces the phase offset") {
        // Narrow lobes so the lower lobe's tail above center is negligible.
        const double phi = 1.3;
        const auto base = make_double_blob({0.25, 3.3, 0.0, 1.0}, g);
        ShaperMask m = ShaperMask::identity(g.n_samples);
        for (std::size_t k = 0; k < g.n_samples; ++k)
            if (g.frequency_offset(k) > 0.0) m.phases[k] = phi;
        const auto out = apply_mask(base, m);
        const auto ref = make_double_blob({0.25, 3.3, phi, 1.0}, g);
        CHECK(detail::max_rel_diff(out.samples(), ref.samples()) <= 1e-12);
    }
    SECTION("unit-amplitude phase masks conserve energy") {
        auto rng = rng::make_engine(11, rng::Stream::property_test, 0);
        std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
        for (int rep = 0; rep < 20; ++rep) {
            ShaperMask m = ShaperMask::identity(g.n_samples);
            for (auto& p : m.phases) p = u(rng);
            CHECK_THAT(pulse_energy(apply_mask(e, m)), WithinAbs(pulse_energy(e), 1e-12));
        }
    }
    SECTION("errors") {
        CHECK_THROWS_AS(apply_mask(e, ShaperMask::identity(10)), GridMismatchError);
        ShaperMask m = ShaperMask::identity(g.n_samples);
        m.amplitudes[3] = 1.5;
        CHECK_THROWS_AS(apply_mask(e, m), ParameterError);
        CHECK_THROWS_AS(apply_mask(to_time(e), ShaperMask::identity(g.n_samples)), DomainError);
    }
}

TEST_CASE("transforms", "[pulse_shaping]") {
    GridSpec g;
    auto rng = rng::make_engine(3, rng::Stream::property_test, 0);

    SECTION("round trip and Parseval on random envelopes") {
        for (int rep = 0; rep < 20; ++rep) {
            const auto e = detail::random_time_envelope(g, rng);
            const auto f = to_frequency(e);
            CHECK(detail::max_rel_diff(to_time(f).samples(), e.samples()) <= 1e-12);
            CHECK(detail::max_rel_diff(to_frequency(to_time(f)).samples(), f.samples()) <= 1e-12);
            CHECK(std::abs(pulse_energy(f) - pulse_energy(e)) <= 1e-12 * pulse_energy(e));
        }
    }
    SECTION("agrees with a direct DFT") {
        const auto e = detail::random_time_envelope(GridSpec{128, 0.05}, rng);
        CHECK(detail::max_rel_diff(to_frequency(e).samples(), oracle::direct_forward(e)) <= 1e-12);
    }
    SECTION("single frequency bin gives constant modulus") {
        ComplexEnvelope f(g, Domain::frequency);
        f[g.n_samples / 2 + 37] = {0.3, -0.4};
        const auto t = to_time(f);
        for (std::size_t j = 0; j < t.size(); ++j) CHECK_THAT(std::abs(t[j]), WithinAbs(0.5 * g.df(), 1e-15));
    }
    SECTION("Gaussian FWHM duality") {
        const auto t = to_time(make_single_blob(0.5, g));
        CHECK_THAT(intensity_fwhm(t), WithinAbs(2.0 * std::numbers::ln2 / (kPi * 0.5), 1e-3));
        CHECK_THAT(intensity_fwhm(t), WithinAbs(0.882, 1e-3));
    }
    SECTION("domain mismatch") {
        const auto e = detail::random_time_envelope(g, rng);
        CHECK_THROWS_AS(to_time(e), DomainError);
        CHECK_THROWS_AS(to_frequency(to_frequency(e)), DomainError);
    }
}

TEST_CASE("pulse energy", "[pulse_shaping]") {
    GridSpec g;
    CHECK(pulse_energy(ComplexEnvelope(g, Domain::time)) == 0.0);
    CHECK_THAT(pulse_energy(make_double_blob({0.7, 2.5, 1.0, 0.6}, g)), WithinAbs(1.0, 1e-12));
}

TEST_CASE("envelope CSV", "[pulse_shaping]") {
    GridSpec g{64, 0.05};
    ComplexEnvelope e(g, Domain::time);
    e[1] = {0.25, -1.5};
    std::ostringstream os;
    write_envelope_csv(os, e);
    std::istringstream in(os.str());
    std::string header, columns, row0, row1;
    std::getline(in, header);
    std::getline(in, columns);
    std::getline(in, row0);
    std::getline(in, row1);
    CHECK(header.rfind("# domain=time n_samples=64 dt=0.05", 0) == 0);
    CHECK(columns == "index,t,re,im");
    CHECK(row1.rfind("1,-1.55", 0) == 0);
    CHECK(row1.substr(row1.size() - 10) == ",0.25,-1.5");
}
