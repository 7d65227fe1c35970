#pragma once

#include <cstdint>
#include <random>

namespace simbt {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from a parent seed and a label.
inline uint64_t derive_seed(uint64_t parent, uint64_t label) {
    return splitmix64(parent ^ splitmix64(label + 0x5851f42d4c957f2dULL));
}

// std::mt19937_64 output is fixed by the standard but the std distributions
// are not, so the mapping to ranges is done here to keep runs identical
// across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed = 1) : eng_(seed) {}

    uint64_t next() { return eng_(); }

    // Uniform integer in [0, n). n must be > 0.
    uint64_t below(uint64_t n) {
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

    // Uniform integer in [lo, hi].
    int64_t range(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo) + 1));
    }

    // Uniform double in [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    bool chance(double p) { return uniform() < p; }

private:
    std::mt19937_64 eng_;
};

}  // namespace simbt
