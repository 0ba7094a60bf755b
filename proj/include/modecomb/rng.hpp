#pragma once

// Deterministic randomness for the whole harness.
//
// Two contracts:
//   * SplitMix64      — a tiny sequential generator for shuffles and other
//                       inherently ordered draws.
//   * counter-based   — pure hashes of (seed, key...) for anything that must
//                       be reproducible independently of evaluation order
//                       (dataset generation, coefficient sampling, init).
//
// No std::*_distribution anywhere: their output is implementation-defined,
// which would break the bit-reproducibility promises made by the dataset
// and sampler modules.

#include <cmath>
#include <cstdint>
#include <vector>

namespace modecomb {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Order-independent mix of a seed and an arbitrary list of stream keys.
template <typename... Keys>
constexpr std::uint64_t hash_mix(std::uint64_t seed, Keys... keys) {
    std::uint64_t h = splitmix64(seed ^ 0x243f6a8885a308d3ULL);
    ((h = splitmix64(h ^ splitmix64(static_cast<std::uint64_t>(keys)))), ...);
    return h;
}

// [0,1) from 53 high bits.
inline double u64_to_unit(std::uint64_t x) {
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// Counter-based uniform in [0,1): a pure function of its keys.
template <typename... Keys>
inline double counter_uniform(std::uint64_t seed, Keys... keys) {
    return u64_to_unit(hash_mix(seed, keys...));
}

// Counter-based standard normal via Box-Muller. Consumes two sub-streams of
// the same key so no state is carried between calls.
template <typename... Keys>
inline double counter_normal(std::uint64_t seed, Keys... keys) {
    const std::uint64_t h = hash_mix(seed, keys...);
    const std::uint64_t a = splitmix64(h ^ 0x5bf0363db4991966ULL);
    const std::uint64_t b = splitmix64(h ^ 0xa3ec647659359acdULL);
    const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;  // (0,1]
    const double u2 = u64_to_unit(b);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

// Sequential generator for shuffles / rejection loops.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double uniform01() { return u64_to_unit(next()); }

    // Uniform integer in [0, n). Rejection keeps it unbiased.
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

  private:
    std::uint64_t state_;
};

// In-place Fisher-Yates.
template <typename T>
void shuffle(std::vector<T>& items, SplitMix64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.bounded(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace modecomb
