#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace flfp {

// splitmix64 finalizer; good avalanche, cheap.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Derives an independent stream seed from a base seed and a path of
/// stream indices. Every parallelizable unit (tree, session, fold)
/// gets its own derived seed so results are order-independent.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix64(base);
    for (std::uint64_t p : path)
        s = mix64(s ^ (p + 0x9e3779b97f4a7c15ull + (s << 6) + (s >> 2)));
    return s;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a) {
    return derive_seed(base, {a});
}
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    return derive_seed(base, {a, b});
}

/// Deterministic random source. Wraps std::mt19937_64 (whose output
/// sequence the standard pins down) and hand-rolls the distributions,
/// since the std distribution algorithms vary across implementations.
class rng {
public:
    explicit rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n), n >= 1.
    std::uint64_t uniform_int(std::uint64_t n) {
        // Lemire's multiply-shift; bias is unmeasurable for our n.
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Standard normal via Box-Muller (one variate per pair of uniforms,
    /// no cached state, so the draw sequence is reproducible).
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

    /// Poisson via Knuth's product method; lambda is split recursively to
    /// keep exp(-lambda) away from underflow.
    std::uint64_t poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        std::uint64_t total = 0;
        while (lambda > 400.0) {
            total += poisson_small(400.0);
            lambda -= 400.0;
        }
        return total + poisson_small(lambda);
    }

private:
    std::uint64_t poisson_small(double lambda) {
        const double limit = std::exp(-lambda);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform01();
        } while (p > limit);
        return k - 1;
    }

    std::mt19937_64 engine_;
};

} // namespace flfp
