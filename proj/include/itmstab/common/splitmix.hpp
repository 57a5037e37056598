#pragma once

#include <cstdint>

namespace itmstab {

/// SplitMix64 (Steele, Lea and Flood). Constants are the published ones.
class SplitMix64 {
public:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

    explicit SplitMix64(std::uint64_t state) : state_(state) {}

    std::uint64_t next() {
        state_ += kGamma;
        return mix(state_);
    }

    /// Uniform in [0, 1): top 53 bits of the next output times 2^-53.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Independent stream k of a master seed: the state is one SplitMix
    /// step applied to (seed + k).
    static SplitMix64 stream(std::uint64_t seed, std::uint64_t k) {
        return SplitMix64(mix(seed + k + kGamma));
    }

private:
    std::uint64_t state_;
};

}  // namespace itmstab
