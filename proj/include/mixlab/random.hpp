#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace mixlab {

// splitmix64 finalizer; used for all seed derivation.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derive an independent stream seed from a parent seed and a stream tag.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
    return mix64(seed ^ mix64(tag + 0x632be59bd9b4e019ULL));
}

/// Small counter-seeded generator for per-sample streams.
///
/// Sample i of an experiment always draws from SampleRng(seed, i), so the
/// values do not depend on how samples are distributed over workers.
/// Satisfies UniformRandomBitGenerator.
class SampleRng {
public:
    using result_type = std::uint64_t;

    SampleRng(std::uint64_t seed, std::uint64_t index) noexcept
        : state_(derive_seed(seed, index)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1p-53; }

    // Uniform on (0, 1].
    double uniform_open0() noexcept { return 1.0 - uniform(); }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    // Standard normal by Box-Muller (one draw per call).
    double normal() noexcept {
        const double u = uniform_open0();
        const double v = uniform();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * 3.14159265358979323846 * v);
    }

private:
    std::uint64_t state_;
};

} // namespace mixlab
