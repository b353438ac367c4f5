#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace sigma {

// One round of splitmix64. Used to expand seeds into generator state and to
// derive substream seeds; stable across platforms.
inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// xoshiro256** seeded via splitmix64. All draws below are defined purely in
// terms of 64-bit integer arithmetic and IEEE doubles, so a given seed yields
// the same stream on every platform (unlike std::uniform_*_distribution).
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    uint64_t next() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform double in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Unbiased integer in [0, bound) (Lemire's multiply-shift with rejection).
    uint32_t uniform_int(uint32_t bound) {
        if (bound == 0) throw std::invalid_argument("uniform_int: bound must be positive");
        uint32_t x = static_cast<uint32_t>(next() >> 32);
        uint64_t m = static_cast<uint64_t>(x) * bound;
        uint32_t l = static_cast<uint32_t>(m);
        if (l < bound) {
            const uint32_t t = (0u - bound) % bound;
            while (l < t) {
                x = static_cast<uint32_t>(next() >> 32);
                m = static_cast<uint64_t>(x) * bound;
                l = static_cast<uint32_t>(m);
            }
        }
        return static_cast<uint32_t>(m >> 32);
    }

    // Standard normal via Box-Muller; second value cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Independent substream; deterministic in (current state, stream id).
    Rng fork(uint64_t stream) const {
        uint64_t h = s_[0] ^ (0x9e3779b97f4a7c15ull * (stream + 1));
        uint64_t sm = h ^ s_[3];
        uint64_t seed = splitmix64(sm);
        return Rng(seed);
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t s_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace sigma
