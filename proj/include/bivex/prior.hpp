#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "bivex/quadrature.hpp"
#include "bivex/spectral.hpp"
#include "bivex/tail.hpp"

namespace bivex {

inline constexpr double euler_gamma = 0.5772156649015328606;

/// Maximal-data-information log prior for one margin, truncated to
/// xi in (-1,1), zeta in (0,1], sigma > 0; -infinity outside.
inline double mdi_log_prior(const MarginParams& g) {
    if (!(g.xi > -1.0 && g.xi < 1.0 && g.zeta > 0.0 && g.zeta <= 1.0 && g.sigma > 0.0))
        return -std::numeric_limits<double>::infinity();
    return std::log(g.zeta) - std::log(g.sigma) - (1.0 + g.xi) * (euler_gamma + std::log(g.zeta));
}

/// Zero-truncated Poisson(lambda) log pmf for the number of interior atoms.
inline double model_log_prior(int m, double lambda) {
    if (m < 1 || !(lambda > 0.0)) return -std::numeric_limits<double>::infinity();
    return m * std::log(lambda) - std::lgamma(m + 1.0) - std::log(std::expm1(lambda));
}

/// P(max of a uniform point on the (m-1)-simplex <= y): the inclusion-
/// exclusion sum 1 - sum_k (-1)^(k-1) C(m,k) (1-ky)^(m-1) over k with ky < 1.
/// Binomials via lgamma and compensated summation keep large m usable.
inline double simplex_max_cdf(int m, double y) {
    if (m < 1) throw std::invalid_argument("simplex_max_cdf: m must be positive");
    if (y >= 1.0) return 1.0;
    if (y * m <= 1.0) return 0.0;
    double acc = 0.0, comp = 0.0;
    for (int k = 1; k <= m; ++k) {
        const double one_m_ky = 1.0 - k * y;
        if (one_m_ky <= 0.0) break;
        const double mag = std::exp(std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0) +
                                    (m - 1.0) * std::log(one_m_ky));
        const double term = ((k & 1) ? mag : -mag) - comp;
        const double tmp = acc + term;
        comp = (tmp - acc) - term;
        acc = tmp;
    }
    return std::clamp(1.0 - acc, 0.0, 1.0);
}

/// Volume of the set of valid interior-atom vectors at fixed (h0,h1):
/// sqrt(m)/(m! (m-1)!) * (m ybar)^(m-1) * P(simplex max <= 1/(m ybar)),
/// where ybar is the constrained atom mean.  Zero outside the open square.
inline double slice_measure(int m, double h0, double h1) {
    if (m < 1) throw std::invalid_argument("slice_measure: m must be positive");
    if (h0 < 0.0 || h1 < 0.0 || h0 >= 0.5 || h1 >= 0.5) return 0.0;
    const double r = 1.0 - h0 - h1;
    const double x = m * (0.5 - h1) / r; // m * ybar
    const double log_pref = 0.5 * std::log(static_cast<double>(m)) - std::lgamma(m + 1.0) -
                            std::lgamma(static_cast<double>(m)) + (m - 1.0) * std::log(x);
    const double p = simplex_max_cdf(m, 1.0 / x);
    return p <= 0.0 ? 0.0 : std::exp(log_pref + std::log(p));
}

/// Total parameter-space volume for m interior atoms: the slice volume
/// integrated over the (h0,h1) square.  The integrand is smooth except
/// across the straight lines h0 = 1 - h1 - (m/k)(1/2 - h1), so the tensor
/// Gauss-Legendre rule is applied piecewise between those lines; `nodes`
/// is the per-segment order.  m = 1 is exactly 1/4.
inline double theta_normalizer(int m, int nodes = 64) {
    if (m < 1) throw std::invalid_argument("theta_normalizer: m must be positive");
    if (m == 1) return 0.25;

    // h1 values where a kink line enters through the h0 = 0 edge
    std::vector<double> outer{0.0, 0.5};
    for (int k = 1; 2 * k < m; ++k) {
        const double h1c = (m - 2.0 * k) / (2.0 * (m - k));
        if (h1c > 0.0 && h1c < 0.5) outer.push_back(h1c);
    }
    std::sort(outer.begin(), outer.end());

    auto inner_integral = [m, nodes](double h1) {
        std::vector<double> cuts{0.0, 0.5};
        for (int k = 1; k < m; ++k) {
            const double h0c = 1.0 - h1 - (static_cast<double>(m) / k) * (0.5 - h1);
            if (h0c > 0.0 && h0c < 0.5) cuts.push_back(h0c);
        }
        std::sort(cuts.begin(), cuts.end());
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            total += integrate_gl([m, h1](double h0) { return slice_measure(m, h0, h1); },
                                  cuts[i], cuts[i + 1], nodes);
        return total;
    };

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < outer.size(); ++i)
        total += integrate_gl(inner_integral, outer[i], outer[i + 1], nodes);
    return total;
}

/// Lazily-built, thread-safe cache of the normalizing volumes.
class ThetaNormalizers {
public:
    explicit ThetaNormalizers(int nodes = 64) : nodes_(nodes) {}

    int nodes() const { return nodes_; }

    double value(int m) const {
        if (m < 1 || m > 400) throw std::invalid_argument("ThetaNormalizers: m out of range");
        std::lock_guard<std::mutex> lock(mtx_);
        auto it = cache_.find(m);
        if (it == cache_.end()) it = cache_.emplace(m, theta_normalizer(m, nodes_)).first;
        return it->second;
    }

    double log_value(int m) const { return std::log(value(m)); }

    std::map<int, double> snapshot() const {
        std::lock_guard<std::mutex> lock(mtx_);
        return cache_;
    }

    /// Preload values (e.g. from a dump); entries are trusted as-is.
    void preload(const std::map<int, double>& values) {
        std::lock_guard<std::mutex> lock(mtx_);
        for (const auto& [m, v] : values)
            if (m >= 1 && v > 0.0) cache_[m] = v;
    }

private:
    int nodes_;
    mutable std::mutex mtx_;
    mutable std::map<int, double> cache_;
};

/// Log prior density of the atom configuration given m: uniform with respect
/// to the reference volume, i.e. -log(normalizer).
inline double theta_log_prior(int m, const ThetaNormalizers& norm) {
    return -norm.log_value(m);
}

/// Joint log prior of a full parameter point.
inline double joint_log_prior(const SpectralParams& theta, const MarginParams& g1,
                              const MarginParams& g2, double lambda, const ThetaNormalizers& norm) {
    const double lp1 = mdi_log_prior(g1), lp2 = mdi_log_prior(g2);
    if (lp1 == -std::numeric_limits<double>::infinity() || lp2 == -std::numeric_limits<double>::infinity())
        return -std::numeric_limits<double>::infinity();
    return model_log_prior(theta.m(), lambda) + theta_log_prior(theta.m(), norm) + lp1 + lp2;
}

} // namespace bivex
