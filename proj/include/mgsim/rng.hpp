#pragma once

#include <cstdint>

namespace mgsim {

// splitmix64: tiny, fast, and bit-reproducible on every platform, unlike
// the std:: distributions. All randomized behavior in the simulator goes
// through this so that runs replay exactly.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stateless mix of two words, used for keyed decisions (vertex sampling).
inline uint64_t mix64(uint64_t a, uint64_t b) {
    uint64_t s = a ^ (b * 0x9e3779b97f4a7c15ULL);
    return splitmix64(s);
}

class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() { return splitmix64(state_); }

    // Uniform in [0, n), unbiased enough for simulation purposes.
    uint64_t next_below(uint64_t n) { return n ? next() % n : 0; }

    // Uniform double in [0, 1).
    double next_double() { return (next() >> 11) * 0x1.0p-53; }

private:
    uint64_t state_;
};

} // namespace mgsim
