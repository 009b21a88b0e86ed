#pragma once

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

namespace raman::detail {

// FFTW planning touches global state; execution with the new-array
// interface is reentrant, planning is not.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

enum class FftSign { forward = FFTW_FORWARD, backward = FFTW_BACKWARD };

/// Unnormalized in-place DFT, sum_n x[n] exp(sign * 2 pi i k n / N).
inline void dft_inplace(std::span<std::complex<double>> data, FftSign sign) {
    if (data.empty()) return;
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(data.size()), ptr, ptr,
                                static_cast<int>(sign), FFTW_ESTIMATE);
    }
    fftw_execute_dft(plan, ptr, ptr);
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
}

/// DFT between centered index orderings (index N/2 is the origin on both
/// sides). Valid for N divisible by 4, where the centering phase reduces to
/// (-1)^(k+n).
inline void centered_dft_inplace(std::span<std::complex<double>> data, FftSign sign) {
    for (std::size_t k = 1; k < data.size(); k += 2) data[k] = -data[k];
    dft_inplace(data, sign);
    for (std::size_t k = 1; k < data.size(); k += 2) data[k] = -data[k];
}

}  // namespace raman::detail
