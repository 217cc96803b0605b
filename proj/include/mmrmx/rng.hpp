#pragma once

#include <cstdint>

namespace mmrmx {

// ---------------------------------------------------------------------------
// Counter-derived seeding and a splittable 64-bit generator.
//
// Every random draw in the library is a pure function of (seed, indices,
// stream), so simulations are reproducible under any execution order and
// any worker count. Streams are separated so that, e.g., adding dropout to
// a replication never perturbs its outcome draws.
// ---------------------------------------------------------------------------

// SplitMix64 finalizer (Steele, Lea & Flood). Bijective on uint64.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a) {
    return mix64(mix64(seed) ^ (a + 0x165667b19e3779f9ULL));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(seed, a), b);
}

enum class Stream : std::uint64_t {
    Covariates = 1,
    Treatment = 2,
    Residuals = 3,
    Dropout = 4,
};

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t state) : state_(state) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1), 53-bit resolution.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on the open interval (0, 1); safe as a quantile-function input.
    double next_open_unit() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via inverse transform; consumes exactly one uniform.
    double next_normal();

private:
    std::uint64_t state_;
};

inline SplitMix64 stream_rng(std::uint64_t rep_seed, Stream s) {
    return SplitMix64(derive_seed(rep_seed, static_cast<std::uint64_t>(s)));
}

// Standard normal quantile function (Wichura's PPND16 rational
// approximations), accurate to ~1e-15 on (0, 1).
double normal_quantile(double p);

// Standard normal distribution function.
double normal_cdf(double x);

// Two-sided tail probability 2 * (1 - Phi(|z|)).
double two_sided_p(double z);

}  // namespace mmrmx
