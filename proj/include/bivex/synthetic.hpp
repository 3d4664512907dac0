#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bivex/rng.hpp"

namespace bivex {

/// One-parameter validation family on [1,inf)^2 with unit Pareto margins:
/// F_r(x1,x2) = (1 - 1/x1)(1 - 1/x2)(1 + r/(x1+x2)), r in [0,1].
/// r = 0 is independence; the angular measure has boundary masses (1-r)/2
/// and uniform interior density r.
struct FrConfig {
    double r = 0.5;
    std::size_t n = 1000;
    std::uint64_t seed = 1;
};

inline void check_fr_domain(double x1, double x2, double r) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("F_r: r outside [0,1]");
    if (!(x1 >= 1.0 && x2 >= 1.0)) throw std::domain_error("F_r: coordinates below 1");
}

inline double fr_cdf(double x1, double x2, double r) {
    check_fr_domain(x1, x2, r);
    return (1.0 - 1.0 / x1) * (1.0 - 1.0 / x2) * (1.0 + r / (x1 + x2));
}

inline double fr_density(double x1, double x2, double r) {
    check_fr_domain(x1, x2, r);
    const double a = 1.0 - 1.0 / x1, b = 1.0 - 1.0 / x2;
    const double da = 1.0 / (x1 * x1), db = 1.0 / (x2 * x2);
    const double s = x1 + x2;
    return da * db * (1.0 + r / s) - (r / (s * s)) * (da * b + a * db) +
           (2.0 * r / (s * s * s)) * a * b;
}

/// Conditional CDF of X2 given X1 = x1 (exact, for verification).
inline double fr_conditional_cdf(double x2, double x1, double r) {
    check_fr_domain(x1, x2, r);
    const double a = 1.0 - 1.0 / x1, b = 1.0 - 1.0 / x2;
    const double s = x1 + x2;
    return b * (1.0 + r / s - r * x1 * x1 * a / (s * s));
}

/// Angular CDF of the family: atoms (1-r)/2 at both ends, uniform inside.
inline double hr_cdf(double w, double r) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("H_r: r outside [0,1]");
    if (w < 0.0 || w > 1.0) throw std::domain_error("H_r: argument outside [0,1]");
    if (w >= 1.0) return 1.0;
    return 0.5 * (1.0 - r) + r * w;
}

inline double hr_density(double w, double r) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("H_r: r outside [0,1]");
    if (!(w > 0.0 && w < 1.0)) throw std::domain_error("H_r: argument outside (0,1)");
    return r;
}

/// Stable tail dependence function of the family: s + t - r s t / (s + t).
inline double hr_ell(double s, double t, double r) {
    if (s < 0.0 || t < 0.0) throw std::domain_error("hr_ell: negative argument");
    if (s + t <= 0.0) return 0.0;
    return s + t - r * s * t / (s + t);
}

/// Exact sampler for F_r by acceptance-rejection.  The density is dominated
/// pointwise by (1 + r/2)/(x1 x2)^2 + 2 r/(x1+x2)^3: the product term is
/// handled by independent unit Paretos, the diagonal term by drawing
/// S = x1+x2 from its own inverse CDF and x1 uniformly on the segment.
/// Overall acceptance probability is 1/(1+r).
inline std::vector<std::pair<double, double>> sample_fr(const FrConfig& cfg) {
    if (!(cfg.r >= 0.0 && cfg.r <= 1.0)) throw std::invalid_argument("sample_fr: r outside [0,1]");
    Rng rng(cfg.seed);
    std::vector<std::pair<double, double>> out;
    out.reserve(cfg.n);
    const double w_pareto = (1.0 + 0.5 * cfg.r) / (1.0 + cfg.r);
    while (out.size() < cfg.n) {
        double x1, x2;
        if (rng.uniform() < w_pareto) {
            x1 = 1.0 / (1.0 - rng.uniform());
            x2 = 1.0 / (1.0 - rng.uniform());
        } else {
            const double root = std::sqrt(rng.uniform());
            const double s = 2.0 / (1.0 - root);
            x1 = 1.0 + (s - 2.0) * rng.uniform();
            x2 = s - x1;
        }
        const double s = x1 + x2;
        const double envelope =
            (1.0 + 0.5 * cfg.r) / (x1 * x1 * x2 * x2) + 2.0 * cfg.r / (s * s * s);
        if (rng.uniform() * envelope <= fr_density(x1, x2, cfg.r)) out.emplace_back(x1, x2);
    }
    return out;
}

} // namespace bivex
