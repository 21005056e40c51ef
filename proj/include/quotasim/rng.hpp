#pragma once

#include <array>
#include <cstdint>

namespace quotasim {

// Simulation randomness uses xoshiro256** seeded through splitmix64.
// Both generators are fully specified here so that streams are
// reproducible across compilers and standard libraries (the std::
// distributions make no such guarantee).

/// splitmix64: used to expand a 64-bit seed and to derive per-scenario
/// sub-seeds. One call advances the state by the golden-ratio increment.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// xoshiro256**: the per-scenario stream. State is seeded with four
/// splitmix64 outputs, as its authors recommend.
class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& s : state_) s = sm.next();
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform integer in [0, bound) via rejection sampling; unbiased and
    /// platform-independent. bound must be > 0.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = (~bound + 1) % bound;  // 2^64 mod bound
        for (;;) {
            const std::uint64_t r = (*this)();
            if (r >= threshold) return r % bound;
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

/// Per-scenario seed derived from a master seed and the scenario's index
/// in enumeration order. Results are therefore independent of execution
/// order and worker count.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
    SplitMix64 sm(master_seed + 0x9E3779B97F4A7C15ULL * (index + 1));
    return sm.next();
}

}  // namespace quotasim
