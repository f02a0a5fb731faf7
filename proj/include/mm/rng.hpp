#pragma once

#include <cstdint>
#include <random>

namespace mm {

/// SplitMix64 finalizer. Used to derive independent sub-seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives a sub-seed from a base seed and up to two stream coordinates,
/// e.g. (seed, purpose, iteration) or (seed, image index).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    return mix64(mix64(mix64(base) ^ (a + 0x632be59bd9b4e019ULL)) ^ (b + 0x85157af5ULL));
}

// Stream identifiers for derive_seed.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kDraw = 2;
inline constexpr std::uint64_t kSample = 3;
inline constexpr std::uint64_t kTriplets = 4;
inline constexpr std::uint64_t kEval = 5;
inline constexpr std::uint64_t kSynth = 6;
}  // namespace stream

/// Seedable generator shared by every module. The distributions are
/// implemented here rather than with <random> distributions so that
/// sequences are identical across standard library implementations.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t index(std::uint64_t n) {
        // Rejection keeps the distribution exactly uniform.
        const std::uint64_t limit = max() - (max() % n + 1) % n;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r > limit);
        return r % n;
    }

    /// Uniform integer in [lo, hi].
    std::int64_t between(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(index(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    /// Uniform real in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (one value per call).
    double normal();

    std::uint64_t next_seed() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace mm
