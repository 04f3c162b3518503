#pragma once

#include <cstdint>

namespace dash {

/// Counter-based generator. Output k (k = 1, 2, ...) of a stream with seed s is
///
///     z = s + k * 0x9E3779B97F4A7C15            (mod 2^64)
///     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///     out = z ^ (z >> 31)
///
/// i.e. the SplitMix64 finalizer applied to a Weyl counter. uniform() takes the
/// top 53 bits times 2^-53; normal() is the cosine branch of Box-Muller on two
/// consecutive uniforms, with u1 mapped to (0, 1]. No state is cached between
/// calls, so the stream is a pure function of (seed, counter).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) noexcept : seed_(seed) {}

    /// Independent stream for a (seed, index) pair, e.g. one per member or sample.
    static Rng derive(std::uint64_t seed, std::uint64_t index) noexcept {
        return Rng(mix(seed ^ mix(index + 0x632BE59BD9B4E019ULL)));
    }

    static std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() noexcept {
        ++counter_;
        return mix(seed_ + counter_ * 0x9E3779B97F4A7C15ULL);
    }

    /// Uniform in [0, 1).
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, n) by rejection; n > 0.
    std::uint64_t below(std::uint64_t n) noexcept {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    double normal() noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

} // namespace dash
