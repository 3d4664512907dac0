#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bivex/quadrature.hpp"
#include "bivex/spline.hpp"

namespace bivex {

/// Parameters of a finitely-supported angular measure on [0,1]: point masses
/// h0 at 0 and h1 at 1, and m equal masses (1-h0-h1)/m at interior locations
/// ys.  The interior locations must average to (1/2-h1)/(1-h0-h1) so that the
/// measure has mean 1/2.  h0 = h1 = 1/2 with no interior atoms is the
/// degenerate two-point case.
struct SpectralParams {
    double h0 = 0.0;
    std::vector<double> ys; // strictly increasing, inside (0,1)
    double h1 = 0.0;

    int m() const { return static_cast<int>(ys.size()); }

    /// Total mass spread over the interior atoms.
    double interior_mass() const { return 1.0 - h0 - h1; }

    /// Required mean of the interior atom locations.
    double target_mean() const { return (0.5 - h1) / (1.0 - h0 - h1); }

    double atom_mean() const {
        double s = 0.0;
        for (double y : ys) s += y;
        return s / static_cast<double>(ys.size());
    }

    bool degenerate() const { return ys.empty(); }

    /// Throws std::invalid_argument unless the parameter constraints hold.
    void validate(double mean_tol = 1e-9) const {
        if (!(h0 >= 0.0 && h0 <= 0.5 && h1 >= 0.0 && h1 <= 0.5))
            throw std::invalid_argument("SpectralParams: boundary masses outside [0, 1/2]");
        if (ys.empty()) {
            if (!(h0 == 0.5 && h1 == 0.5))
                throw std::invalid_argument("SpectralParams: no interior atoms requires h0 = h1 = 1/2");
            return;
        }
        if (h0 >= 0.5 || h1 >= 0.5)
            throw std::invalid_argument("SpectralParams: boundary mass 1/2 requires the degenerate case");
        double prev = 0.0;
        for (double y : ys) {
            if (!(y > prev)) throw std::invalid_argument("SpectralParams: interior atoms not strictly increasing in (0,1)");
            prev = y;
        }
        if (!(prev < 1.0)) throw std::invalid_argument("SpectralParams: interior atom at or beyond 1");
        if (std::abs(atom_mean() - target_mean()) > mean_tol)
            throw std::invalid_argument("SpectralParams: interior atoms violate the mean constraint");
    }
};

/// CDF of the finitely-supported measure itself (right-continuous).
inline double step_cdf(const SpectralParams& p, double w) {
    if (w < 0.0 || w > 1.0) throw std::domain_error("step_cdf: argument outside [0,1]");
    if (w >= 1.0) return 1.0;
    const auto it = std::upper_bound(p.ys.begin(), p.ys.end(), w);
    const double k = static_cast<double>(it - p.ys.begin());
    const double m = static_cast<double>(p.ys.size());
    return p.ys.empty() ? p.h0 : p.h0 + p.interior_mass() * k / m;
}

/// Equal-mass discretization of a continuous distribution on [0,1]: splits
/// [0,1] into m cells of probability 1/m and places one atom at each cell's
/// conditional mean, so every moment of order one is preserved exactly.
/// cdf must be a nondecreasing CDF with cdf(0) = 0 and cdf(1) = 1;
/// cdf_integral(a,b) must return the integral of cdf over [a,b].
inline std::vector<double> discrete_approximation(
    const std::function<double(double)>& cdf,
    const std::function<double(double, double)>& cdf_integral, int m) {
    if (m < 1) throw std::invalid_argument("discrete_approximation: m must be positive");
    if (std::abs(cdf(0.0)) > 1e-12 || std::abs(cdf(1.0) - 1.0) > 1e-9)
        throw std::invalid_argument("discrete_approximation: cdf must run from 0 to 1");
    double prev = -1e-12;
    for (int k = 0; k <= 128; ++k) {
        const double v = cdf(static_cast<double>(k) / 128.0);
        if (v < prev - 1e-12 || v < -1e-12 || v > 1.0 + 1e-12)
            throw std::invalid_argument("discrete_approximation: cdf not a nondecreasing map into [0,1]");
        prev = v;
    }

    std::vector<double> q(static_cast<std::size_t>(m) + 1);
    q[0] = 0.0;
    for (int i = 1; i <= m; ++i)
        q[static_cast<std::size_t>(i)] =
            bisect_nondecreasing(cdf, 0.0, 1.0, static_cast<double>(i) / m, 1e-15);
    std::vector<double> t(static_cast<std::size_t>(m));
    for (int i = 1; i <= m; ++i) {
        const double a = q[static_cast<std::size_t>(i - 1)], b = q[static_cast<std::size_t>(i)];
        const double cell = b - a;
        double ti = b - m * cdf_integral(a, b) + (i - 1) * cell;
        t[static_cast<std::size_t>(i - 1)] = std::clamp(ti, a, b);
    }
    for (std::size_t i = 0; i + 1 < t.size(); ++i)
        if (t[i + 1] < t[i]) throw std::logic_error("discrete_approximation: atoms out of order");
    return t;
}

/// Same, integrating the CDF numerically.
inline std::vector<double> discrete_approximation(const std::function<double(double)>& cdf, int m) {
    auto num_int = [&cdf](double a, double b) { return adaptive_simpson(cdf, a, b, 1e-13); };
    return discrete_approximation(cdf, num_int, m);
}

/// Finite-support parameters approximating a general angular measure given as
/// boundary masses plus the normalized CDF of its continuous interior part.
/// The input measure must have mean 1/2.
inline SpectralParams discretize_measure(double h0, double h1,
                                         const std::function<double(double)>& interior_cdf,
                                         const std::function<double(double, double)>& interior_cdf_integral,
                                         int m) {
    if (1.0 - h0 - h1 <= 0.0) {
        if (std::abs(h0 - 0.5) > 1e-12 || std::abs(h1 - 0.5) > 1e-12)
            throw std::invalid_argument("discretize_measure: boundary masses must each be 1/2 when they absorb all mass");
        return SpectralParams{0.5, {}, 0.5};
    }
    SpectralParams p{h0, discrete_approximation(interior_cdf, interior_cdf_integral, m), h1};
    p.validate(1e-7);
    return p;
}

/// Knot/value tables of the two monotone splines pinching the step CDF of p:
/// the lower one interpolates the left limits at the interior atoms, the
/// upper one the right values, both extended flat to the boundary knots.
inline std::pair<MonotoneSpline, MonotoneSpline> build_bracketing_splines(const SpectralParams& p) {
    const std::size_t m = p.ys.size();
    if (m == 0) {
        std::vector<double> k{0.0, 1.0}, v{0.5, 0.5};
        return {MonotoneSpline(k, v), MonotoneSpline(k, v)};
    }
    const double step = p.interior_mass() / static_cast<double>(m);
    std::vector<double> knots(m + 2), lo(m + 2), hi(m + 2);
    knots[0] = 0.0;
    knots[m + 1] = 1.0;
    for (std::size_t i = 0; i < m; ++i) knots[i + 1] = p.ys[i];
    lo[0] = p.h0;
    hi[0] = p.h0 + step;
    for (std::size_t i = 1; i <= m; ++i) {
        lo[i] = p.h0 + step * static_cast<double>(i - 1);
        hi[i] = p.h0 + step * static_cast<double>(i);
    }
    lo[m + 1] = lo[m];
    hi[m + 1] = hi[m];
    return {MonotoneSpline(knots, lo), MonotoneSpline(std::move(knots), std::move(hi))};
}

/// Smoothed angular measure: the unique mean-1/2 convex combination of the
/// two bracketing spline CDFs.  Exposes the CDF, the interior density, the
/// boundary atoms and exact partial first moments of the interior part.
class SpectralMeasure {
public:
    SpectralMeasure() : SpectralMeasure(SpectralParams{0.5, {}, 0.5}) {}

    explicit SpectralMeasure(const SpectralParams& p) {
        p.validate();
        auto pair = build_bracketing_splines(p);
        lower_ = std::move(pair.first);
        upper_ = std::move(pair.second);
        const double a_lo = lower_.integral(), a_hi = upper_.integral();
        if (a_hi - a_lo < 1e-15) {
            alpha_ = 0.5;
        } else {
            alpha_ = (a_hi - 0.5) / (a_hi - a_lo);
            if (alpha_ < -1e-9 || alpha_ > 1.0 + 1e-9)
                throw std::logic_error("SpectralMeasure: mixing weight escaped [0,1]");
            alpha_ = std::clamp(alpha_, 0.0, 1.0);
        }
        atom0_ = mix(lower_.values().front(), upper_.values().front());
        atom1_ = 1.0 - mix(lower_.values().back(), upper_.values().back());
    }

    /// CDF on [0,1] (right-continuous; includes the boundary atoms).
    double cdf(double w) const {
        if (w < 0.0 || w > 1.0) throw std::domain_error("SpectralMeasure::cdf: argument outside [0,1]");
        if (w >= 1.0) return 1.0;
        return mix(lower_(w), upper_(w));
    }

    /// Density of the interior (absolutely continuous) part, w in (0,1).
    double density(double w) const {
        if (!(w > 0.0 && w < 1.0)) throw std::domain_error("SpectralMeasure::density: argument outside (0,1)");
        return mix(lower_.derivative(w), upper_.derivative(w));
    }

    double atom0() const { return atom0_; }
    double atom1() const { return atom1_; }
    double alpha() const { return alpha_; }

    /// Integral of w * density(w) over [a,b], 0 <= a <= b <= 1.
    double moment_w(double a, double b) const { return mix(lower_.moment_w(a, b), upper_.moment_w(a, b)); }

    /// Integral of (1-w) * density(w) over [a,b].
    double moment_1mw(double a, double b) const { return mix(lower_.moment_1mw(a, b), upper_.moment_1mw(a, b)); }

    /// Mean of the full measure (should be 1/2 by construction).
    double mean() const { return atom1_ + moment_w(0.0, 1.0); }

    /// Total mass (should be 1).
    double total_mass() const { return atom0_ + atom1_ + mix(lower_(1.0) - lower_(0.0), upper_(1.0) - upper_(0.0)); }

    const MonotoneSpline& lower() const { return lower_; }
    const MonotoneSpline& upper() const { return upper_; }

private:
    double mix(double lo, double hi) const { return alpha_ * lo + (1.0 - alpha_) * hi; }

    MonotoneSpline lower_, upper_;
    double alpha_ = 0.5, atom0_ = 0.5, atom1_ = 0.5;
};

} // namespace bivex
