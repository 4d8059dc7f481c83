#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace comotion {

// Small deterministic generator used by every stochastic stage. All draws are
// implemented here (no std::*_distribution) so that identical seeds give
// bit-identical streams on any platform or standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // splitmix64 step
    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in (0, 1]
    double uniform01_open_low() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // unbiased index in [0, n)
    std::uint64_t index(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x < threshold);
        return x % n;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Box-Muller; draws two uniforms per call, spare discarded
    double normal(double mean = 0.0, double sigma = 1.0) {
        const double u1 = uniform01_open_low();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t state_;
};

// Derives a decorrelated child seed for a named stage or item (pair index,
// track index, restart number). One master seed governs the whole pipeline.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base ^ (0x9E3779B97F4A7C15ULL * (stream + 0x632BE59BD9B4E019ULL));
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Stage offsets for decorrelating the stochastic stages under one master seed.
namespace rng_stage {
inline constexpr std::uint64_t kSynth = 1;
inline constexpr std::uint64_t kGrouping = 2;
inline constexpr std::uint64_t kTemplateSampling = 3;
inline constexpr std::uint64_t kSplit = 4;
inline constexpr std::uint64_t kTexture = 5;
}  // namespace rng_stage

}  // namespace comotion
