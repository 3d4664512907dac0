#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bivex/spectral.hpp"

namespace bivex {

/// Tail parameters of one margin, anchored at a fixed threshold u:
/// -log G(x) = zeta * (1 + xi (x - u) / sigma)^(-1/xi) for x >= u,
/// so G(u) = exp(-zeta).  xi = 0 means the exponential limit.
struct MarginParams {
    double xi = 0.0;
    double zeta = 0.1;
    double sigma = 1.0;
    double u = 0.0;

    bool valid() const { return sigma > 0.0 && zeta > 0.0; }

    double upper_endpoint() const {
        return xi < 0.0 ? u - sigma / xi : std::numeric_limits<double>::infinity();
    }

    /// -log G(x); decreasing in x, equal to zeta at the threshold,
    /// 0 at or beyond the upper endpoint.
    double neg_log_cdf(double x) const {
        if (x < u) throw std::domain_error("MarginParams::neg_log_cdf: x below threshold");
        const double z = (x - u) / sigma;
        if (std::abs(xi) < 1e-9) return zeta * std::exp(-z);
        const double arg = 1.0 + xi * z;
        if (arg <= 0.0) {
            if (xi > 0.0) throw std::domain_error("MarginParams::neg_log_cdf: outside support");
            return 0.0;
        }
        return zeta * std::exp(-std::log1p(xi * z) / xi);
    }

    /// log of -d/dx of neg_log_cdf: the marginal factor of every density
    /// branch.  -infinity at or beyond the upper endpoint.
    double log_jacobian(double x) const {
        if (x < u) throw std::domain_error("MarginParams::log_jacobian: x below threshold");
        const double z = (x - u) / sigma;
        const double lead = std::log(zeta / sigma);
        if (std::abs(xi) < 1e-9) return lead - z;
        const double arg = 1.0 + xi * z;
        if (arg <= 0.0) return -std::numeric_limits<double>::infinity();
        return lead - (1.0 / xi + 1.0) * std::log1p(xi * z);
    }

    /// Inverse of the marginal CDF G within the tail: G(x) = p, p in [exp(-zeta), 1).
    double quantile(double p) const {
        if (!(p > 0.0 && p < 1.0)) throw std::domain_error("MarginParams::quantile: p outside (0,1)");
        const double s = -std::log(p);
        if (s > zeta + 1e-12) throw std::domain_error("MarginParams::quantile: p below the threshold level");
        if (std::abs(xi) < 1e-9) return u + sigma * std::log(zeta / s);
        return u + sigma * (std::pow(zeta / s, xi) - 1.0) / xi;
    }
};

/// Stable tail dependence function and its partial derivatives at (s,t).
struct EllDerivs {
    double value = 0.0;
    double ds = 0.0;  // partial in s
    double dt = 0.0;  // partial in t
    double dst = 0.0; // mixed second partial (nonpositive)
};

/// l(s,t) = 2 * Integral of max(w s, (1-w) t) dH(w); 1-homogeneous, convex,
/// max(s,t) <= l(s,t) <= s+t.  Computed exactly from the partial moments of
/// the measure, using l = s*ds + t*dt.
inline EllDerivs ell_with_partials(const SpectralMeasure& H, double s, double t) {
    if (s < 0.0 || t < 0.0) throw std::domain_error("ell_with_partials: negative argument");
    EllDerivs e;
    if (s + t <= 0.0) {
        e.ds = e.dt = 1.0;
        return e;
    }
    const double wstar = t / (s + t);
    e.ds = 2.0 * (H.atom1() + H.moment_w(wstar, 1.0));
    e.dt = 2.0 * (H.atom0() + H.moment_1mw(0.0, wstar));
    e.value = s * e.ds + t * e.dt;
    if (s > 0.0 && t > 0.0) {
        const double sum = s + t;
        e.dst = -2.0 * s * t / (sum * sum * sum) * H.density(wstar);
    }
    return e;
}

inline double ell(const SpectralMeasure& H, double s, double t) {
    return ell_with_partials(H, s, t).value;
}

/// Curvature factor of the fully-observed density branch:
/// ds*dt - dst >= 0 up to rounding.
inline double ell_curvature(const EllDerivs& e) {
    const double delta = e.ds * e.dt - e.dst;
    if (delta < -1e-12) throw std::logic_error("ell curvature went negative");
    return delta > 0.0 ? delta : 0.0;
}

/// One observation censored from below at the pair of thresholds: coordinates
/// are clamped (x1 >= u1, x2 >= u2) and d1/d2 flag actual exceedances.
struct CensoredObservation {
    double x1 = 0.0;
    double x2 = 0.0;
    bool d1 = false;
    bool d2 = false;
};

/// Log density of one censored observation under the tail model
/// F(x1,x2) = exp(-l(s(x1), t(x2))).  Four branches by censoring pattern:
/// fully censored mass, two half-censored edge densities, full density.
inline double log_censored_density(const CensoredObservation& obs, const SpectralMeasure& H,
                                   const MarginParams& g1, const MarginParams& g2) {
    const double neg_inf = -std::numeric_limits<double>::infinity();
    if (!obs.d1 && !obs.d2) return -ell(H, g1.zeta, g2.zeta);
    if (obs.d1 && !obs.d2) {
        const double lj = g1.log_jacobian(obs.x1);
        if (lj == neg_inf) return neg_inf;
        const EllDerivs e = ell_with_partials(H, g1.neg_log_cdf(obs.x1), g2.zeta);
        return lj + std::log(e.ds) - e.value;
    }
    if (!obs.d1 && obs.d2) {
        const double lj = g2.log_jacobian(obs.x2);
        if (lj == neg_inf) return neg_inf;
        const EllDerivs e = ell_with_partials(H, g1.zeta, g2.neg_log_cdf(obs.x2));
        return lj + std::log(e.dt) - e.value;
    }
    const double lj1 = g1.log_jacobian(obs.x1), lj2 = g2.log_jacobian(obs.x2);
    if (lj1 == neg_inf || lj2 == neg_inf) return neg_inf;
    const EllDerivs e = ell_with_partials(H, g1.neg_log_cdf(obs.x1), g2.neg_log_cdf(obs.x2));
    return lj1 + lj2 + std::log(ell_curvature(e)) - e.value;
}

inline double censored_density(const CensoredObservation& obs, const SpectralMeasure& H,
                               const MarginParams& g1, const MarginParams& g2) {
    return std::exp(log_censored_density(obs, H, g1, g2));
}

/// A censored sample grouped by censoring pattern, for fast likelihood sweeps.
struct CensoredSample {
    double u1 = 0.0;
    double u2 = 0.0;
    std::size_t n_neither = 0;                          // both coordinates censored
    std::vector<double> x1_only;                        // x1 exceeds, x2 censored
    std::vector<double> x2_only;                        // x2 exceeds, x1 censored
    std::vector<std::pair<double, double>> both;        // both exceed

    std::size_t size() const { return n_neither + x1_only.size() + x2_only.size() + both.size(); }
    std::size_t n_exceed1() const { return x1_only.size() + both.size(); }
    std::size_t n_exceed2() const { return x2_only.size() + both.size(); }

    std::vector<CensoredObservation> observations() const {
        std::vector<CensoredObservation> out;
        out.reserve(size());
        for (std::size_t i = 0; i < n_neither; ++i) out.push_back({u1, u2, false, false});
        for (double x : x1_only) out.push_back({x, u2, true, false});
        for (double x : x2_only) out.push_back({u1, x, false, true});
        for (auto& [a, b] : both) out.push_back({a, b, true, true});
        return out;
    }
};

/// Censored log likelihood; shares the per-branch constants across the
/// grouped observations.  -infinity propagates (a rejected state).
inline double log_likelihood(const CensoredSample& data, const SpectralMeasure& H,
                             const MarginParams& g1, const MarginParams& g2) {
    if (g1.u != data.u1 || g2.u != data.u2)
        throw std::invalid_argument("log_likelihood: margin anchors disagree with the sample thresholds");
    if (!g1.valid() || !g2.valid()) return -std::numeric_limits<double>::infinity();
    const double neg_inf = -std::numeric_limits<double>::infinity();

    double ll = -static_cast<double>(data.n_neither) * ell(H, g1.zeta, g2.zeta);
    for (double x : data.x1_only) {
        const double lj = g1.log_jacobian(x);
        if (lj == neg_inf) return neg_inf;
        const EllDerivs e = ell_with_partials(H, g1.neg_log_cdf(x), g2.zeta);
        ll += lj + std::log(e.ds) - e.value;
    }
    for (double x : data.x2_only) {
        const double lj = g2.log_jacobian(x);
        if (lj == neg_inf) return neg_inf;
        const EllDerivs e = ell_with_partials(H, g1.zeta, g2.neg_log_cdf(x));
        ll += lj + std::log(e.dt) - e.value;
    }
    for (const auto& [a, b] : data.both) {
        const double lj1 = g1.log_jacobian(a), lj2 = g2.log_jacobian(b);
        if (lj1 == neg_inf || lj2 == neg_inf) return neg_inf;
        const EllDerivs e = ell_with_partials(H, g1.neg_log_cdf(a), g2.neg_log_cdf(b));
        ll += lj1 + lj2 + std::log(ell_curvature(e)) - e.value;
    }
    return ll;
}

/// Same likelihood from a flat observation list (reference path).
inline double log_likelihood(const std::vector<CensoredObservation>& obs, const SpectralMeasure& H,
                             const MarginParams& g1, const MarginParams& g2) {
    if (!g1.valid() || !g2.valid()) return -std::numeric_limits<double>::infinity();
    double ll = 0.0;
    for (const auto& o : obs) {
        ll += log_censored_density(o, H, g1, g2);
        if (ll == -std::numeric_limits<double>::infinity()) break;
    }
    return ll;
}

} // namespace bivex
