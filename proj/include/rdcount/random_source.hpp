#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>

namespace rdcount {

/** @brief Purpose tags that derive pairwise-disjoint seed streams from one
 *         experiment seed, so training, validation, evaluation, weight init,
 *         shuffling, and dropout can never share random draws. */
enum class SeedStream : std::uint64_t {
    TrainData = 1,
    ValData = 2,
    EvalData = 3,
    Init = 4,
    Shuffle = 5,
    Dropout = 6,
};

/** @brief Stateless 64-bit finalizer (splitmix64 output function). */
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/** @brief Derive the seed for (base experiment seed, stream, index).
 *
 *  Chained mix64 hashing: distinct (stream, index) pairs map to distinct
 *  seeds with overwhelming probability, giving disjoint substreams.
 */
inline std::uint64_t derive_seed(std::uint64_t base, SeedStream stream, std::uint64_t index = 0) {
    std::uint64_t h = mix64(base);
    h = mix64(h ^ mix64(static_cast<std::uint64_t>(stream)));
    h = mix64(h ^ mix64(index));
    return h;
}

/** @brief Deterministic random source: mt19937_64 plus fixed, documented
 *         mappings to floats/integers so every draw is bit-reproducible
 *         across platforms and compilers. */
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /** @brief Uniform double in [0, 1) with 53 random mantissa bits. */
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /** @brief Uniform double in [lo, hi). */
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /** @brief Two independent standard normal draws (Box-Muller).
     *
     *  Always consumes exactly two uniforms, keeping draw accounting
     *  deterministic for consumers that fill arrays pairwise.
     */
    std::pair<double, double> normal_pair() {
        const double u1 = 1.0 - uniform01(); // (0, 1]: keeps log argument positive
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(theta), r * std::sin(theta)};
    }

    /** @brief Unbiased uniform integer in [0, n) (Lemire rejection method). */
    std::uint64_t bounded(std::uint64_t n) {
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                m = static_cast<unsigned __int128>(next_u64()) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /** @brief Uniform integer in the inclusive range [lo, hi]. */
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(bounded(static_cast<std::uint64_t>(hi - lo) + 1));
    }

private:
    std::mt19937_64 engine_;
};

} // namespace rdcount
