#pragma once

#include <cstdint>
#include <random>

namespace raman::rng {

/// SplitMix64 finalizer; used to decorrelate counter-derived seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Named purposes so that independent consumers of one master seed never
/// share a stream.
enum class Stream : std::uint64_t {
    trial_noise = 1,
    genetic_algorithm = 2,
    evaluation_seeds = 3,
    calibration = 4,
    property_test = 5,
};

/// Seed for substream `index` of `purpose` under `master`. Pure function of
/// its arguments, so work items can run in any order.
constexpr std::uint64_t substream_seed(std::uint64_t master, Stream purpose,
                                       std::uint64_t index) noexcept {
    return mix64(mix64(master ^ mix64(static_cast<std::uint64_t>(purpose))) + index);
}

inline std::mt19937_64 make_engine(std::uint64_t master, Stream purpose,
                                   std::uint64_t index) {
    return std::mt19937_64(substream_seed(master, purpose, index));
}

}  // namespace raman::rng
