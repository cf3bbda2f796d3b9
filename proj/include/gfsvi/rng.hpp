#pragma once

#include <cstdint>
#include <random>

#include "gfsvi/common.hpp"

namespace gfsvi {

// All variate transforms are hand-rolled on top of mt19937_64 so streams are
// reproducible independent of the standard library's distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform on [0,1) with 53 random bits
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // uniform on (0,1), safe inside log/probit transforms
    double uniform_open() {
        double u;
        do {
            u = uniform01();
        } while (u <= 0.0);
        return u;
    }

    double normal() { return norm_inv_cdf(uniform_open()); }

    bool bernoulli(double p) { return uniform01() < p; }

    // unbiased integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

private:
    std::mt19937_64 engine_;
};

// Decorrelates per-cell streams derived from one master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline Rng cell_rng(std::uint64_t master_seed, std::uint64_t cell_index) {
    return Rng(splitmix64(master_seed ^ splitmix64(cell_index + 1)));
}

}  // namespace gfsvi
