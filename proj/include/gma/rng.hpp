#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace gma {

/// SplitMix64 step; used both as a seed scrambler and to derive
/// independent stream seeds from (master seed, replicate, subject, ...).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Hash-chains the parts so that streams for different index tuples never
/// share a seed in practice.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x8f1bbcdcbfa53e0bULL;
    for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
    return h;
}

/// Deterministic random stream. All variate transforms are written out
/// explicitly (no std::*_distribution) so that a given seed yields the same
/// sequence on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

    std::uint64_t raw() { return eng_(); }

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
        double u2 = uniform();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    bool bernoulli(double prob_one) { return uniform() < prob_one; }

    /// Knuth's product-of-uniforms method; fine for the moderate means used here.
    int poisson(double mean) {
        double limit = std::exp(-mean);
        double prod = uniform();
        int count = 0;
        while (prod > limit) {
            prod *= uniform();
            ++count;
        }
        return count;
    }

    /// Uniform integer in [0, n).
    int below(int n) {
        int v = static_cast<int>(uniform() * n);
        return v < n ? v : n - 1;
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace gma
