#pragma once

#include <cstdint>

namespace urnlab {

/// Counter-based stream generator: output i of stream (seed, stream) is a
/// pure function of (seed, stream, i), so replications replay identically on
/// any platform and in any execution order.
class CounterRng {
public:
    CounterRng(std::uint64_t master_seed, std::uint64_t stream) {
        key_ = mix(master_seed + 0x9e3779b97f4a7c15ULL);
        key_ = mix(key_ ^ mix(stream + 0xbf58476d1ce4e5b9ULL));
        if (key_ == 0) key_ = 0x94d049bb133111ebULL;
    }

    std::uint64_t next_u64() { return mix(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL); }

    /// Uniform in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    std::uint64_t counter() const { return counter_; }

private:
    // splitmix64 finalizer
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

} // namespace urnlab
