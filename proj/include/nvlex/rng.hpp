#pragma once

// Deterministic random numbers for the synthetic-data generators.
//
// All randomness in this library flows through SplitMix64 (Steele, Lea &
// Flood 2014) plus an explicit Box-Muller transform, so a (seed, parameters)
// pair produces the same stream on every platform and stdlib. Do not swap in
// std::normal_distribution & friends: their output is implementation-defined.

#include <cmath>
#include <cstdint>

namespace nvlex::rng {

struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

// Derive an independent child seed (stream index k) from a master seed.
inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t k) {
    SplitMix64 s(seed ^ (0x632be59bd9b4e019ULL * (k + 1)));
    return s.next();
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_.next(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(gen_.next() >> 11) * 0x1.0p-53; }

    // standard normal, Box-Muller with cached second deviate
    double gaussian() {
        if (has_cache_) {
            has_cache_ = false;
            return cache_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cache_ = r * std::sin(a);
        has_cache_ = true;
        return r * std::cos(a);
    }

    double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

    // exponential waiting time, rate > 0
    double exponential(double rate) {
        return -std::log(1.0 - uniform()) / rate;
    }

    // Poisson count. Exact (inversion by multiplication) for small means,
    // rounded-normal approximation above 50 where the relative error is
    // far below the noise levels used anywhere in this library.
    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean > 50.0) {
            const double v = mean + std::sqrt(mean) * gaussian();
            return v <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(v));
        }
        const double limit = std::exp(-mean);
        double prod = uniform();
        std::uint64_t n = 0;
        while (prod > limit) {
            prod *= uniform();
            ++n;
        }
        return n;
    }

private:
    SplitMix64 gen_;
    double cache_ = 0.0;
    bool has_cache_ = false;
};

}  // namespace nvlex::rng
