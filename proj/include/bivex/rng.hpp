#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bivex {

/// Deterministic random source.  All variate generation is implemented here
/// rather than with std::*_distribution so that streams are bit-reproducible
/// across standard libraries and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    /// Uniform on [0,1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [a,b).
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Uniform on {0,...,n-1}.
    std::size_t uniform_index(std::size_t n) {
        // multiply-shift; bias is O(n / 2^64), irrelevant for the small n used here
        return static_cast<std::size_t>((static_cast<unsigned __int128>(engine_()) * n) >> 64);
    }

    /// Standard normal via Box-Muller (one spare cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Poisson by inversion (sequential search); fine for the small means used here.
    long poisson(double mean) {
        double p = std::exp(-mean), cdf = p;
        const double u = uniform();
        long k = 0;
        while (u > cdf && k < 10000) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace bivex
