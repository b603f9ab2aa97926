#pragma once

// Counter-based trajectory RNG. Every trajectory gets its own xoshiro256**
// stream derived from (master_seed, trajectory_index) through SplitMix64, so
// ensembles are reproducible regardless of scheduling order.

#include <cmath>
#include <cstdint>

namespace latmon {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
  public:
    Rng() : Rng(0, 0) {}

    Rng(std::uint64_t master_seed, std::uint64_t stream_index) {
        std::uint64_t x = master_seed ^ (0x6a09e667f3bcc909ULL + stream_index * 0x100000001b3ULL);
        for (auto& w : state_) w = splitmix64(x);
    }

    std::uint64_t next_u64() {
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

    // uniform in [0,1) with 53-bit resolution
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in (0,1], safe as a norm^2 jump target
    double uniform_pos() { return 1.0 - uniform(); }

    // standard normal, Box-Muller; consumes exactly two uniforms per call
    double normal() {
        double u1 = uniform_pos();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

  private:
    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
    std::uint64_t state_[4];
};

} // namespace latmon
