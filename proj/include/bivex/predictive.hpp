#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bivex/mcmc.hpp"

namespace bivex {

/// Posterior-predictive density of the joint tail on a product grid.
/// density[i][j] belongs to the point (x1[i], x2[j]).  Cells with a
/// coordinate below its threshold carry no continuous density; they are
/// left at zero and counted in skipped_cells.  The predictive mass of the
/// fully censored corner (both coordinates below their thresholds) is
/// reported separately as corner_mass.
struct PredictiveGrid {
    std::vector<double> x1;
    std::vector<double> x2;
    std::vector<std::vector<double>> density;
    double corner_mass = 0.0;
    std::size_t draws = 0;
    std::size_t skipped_cells = 0;
};

/// Conditional predictive law of the second coordinate given X1 = x1.
/// density/cdf describe the full conditional, whose mass on [u2, inf) is
/// 1 - below_threshold_mass; the exceedance_* accessors rescale to the law
/// given X2 > u2 as well.  Draws whose fitted margin puts zero density at
/// x1 contribute nothing and are counted in zero_marginal_draws.
struct ConditionalPredictive {
    double x1 = 0.0;
    std::vector<double> x2;
    std::vector<double> density;
    std::vector<double> cdf;
    double below_threshold_mass = 0.0;
    double marginal_density = 0.0;
    std::size_t draws = 0;
    std::size_t zero_marginal_draws = 0;

    double exceedance_density(std::size_t j) const {
        return density.at(j) / (1.0 - below_threshold_mass);
    }
    double exceedance_cdf(std::size_t j) const {
        return (cdf.at(j) - below_threshold_mass) / (1.0 - below_threshold_mass);
    }
};

namespace detail {

inline void require_axis(const std::vector<double>& axis, const char* name) {
    if (axis.empty())
        throw std::invalid_argument(std::string("predictive: empty ") + name + " grid");
    for (std::size_t i = 1; i < axis.size(); ++i)
        if (!(axis[i] > axis[i - 1]))
            throw std::invalid_argument(std::string("predictive: ") + name +
                                        " grid must be strictly increasing");
}

inline std::pair<double, double> require_common_thresholds(const Trace& trace) {
    if (trace.records.empty())
        throw std::invalid_argument("predictive: the trace holds no draws");
    const double u1 = trace.records.front().g1.u;
    const double u2 = trace.records.front().g2.u;
    for (const auto& rec : trace.records)
        if (rec.g1.u != u1 || rec.g2.u != u2)
            throw std::invalid_argument("predictive: draws disagree on the thresholds");
    return {u1, u2};
}

inline std::vector<SpectralMeasure> trace_measures(const Trace& trace) {
    std::vector<SpectralMeasure> out;
    out.reserve(trace.records.size());
    for (const auto& rec : trace.records) out.emplace_back(rec.theta);
    return out;
}

/// Per-draw pieces of the conditional law at a fixed x1: the marginal
/// density weight f1[k] = exp(lj1 - s1) (zero for draws whose support
/// excludes x1) and the running numerators built from them.
struct ConditionalTerms {
    const Trace* trace = nullptr;
    std::vector<SpectralMeasure> measures;
    std::vector<double> lj1;
    std::vector<double> s1;
    std::vector<double> f1;
    double denom = 0.0;
    std::size_t zero_count = 0;
    double u2 = 0.0;

    /// Sum over draws of d/dx1 F_k(x1, x2) = e^{lj1} dl/ds e^{-l(s1,t)}.
    double cdf_numerator(double x2) const {
        double acc = 0.0;
        for (std::size_t k = 0; k < f1.size(); ++k) {
            if (f1[k] <= 0.0) continue;
            const double t = trace->records[k].g2.neg_log_cdf(x2);
            const EllDerivs e = ell_with_partials(measures[k], s1[k], t);
            acc += std::exp(lj1[k] - e.value) * e.ds;
        }
        return acc;
    }

    /// Sum over draws of the joint density at (x1, x2).
    double density_numerator(double x2) const {
        double acc = 0.0;
        for (std::size_t k = 0; k < f1.size(); ++k) {
            if (f1[k] <= 0.0) continue;
            const auto& rec = trace->records[k];
            const double lj2 = rec.g2.log_jacobian(x2);
            if (lj2 == -std::numeric_limits<double>::infinity()) continue;
            const double t = rec.g2.neg_log_cdf(x2);
            const EllDerivs e = ell_with_partials(measures[k], s1[k], t);
            acc += std::exp(lj1[k] + lj2 - e.value) * ell_curvature(e);
        }
        return acc;
    }

    /// P(X2 > x2 | X1 = x1, data): nonincreasing, continuous, 0 at infinity.
    double survival(double x2) const { return 1.0 - cdf_numerator(x2) / denom; }
};

inline ConditionalTerms conditional_terms(const Trace& trace, double x1) {
    const auto [u1, u2] = require_common_thresholds(trace);
    if (!(x1 >= u1))
        throw std::invalid_argument("conditional predictive: x1 must sit at or above the first threshold");
    ConditionalTerms ct;
    ct.trace = &trace;
    ct.measures = trace_measures(trace);
    ct.u2 = u2;
    const std::size_t n = trace.records.size();
    ct.lj1.resize(n);
    ct.s1.resize(n);
    ct.f1.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& g1 = trace.records[k].g1;
        const double lj = g1.log_jacobian(x1);
        ct.lj1[k] = lj;
        if (lj == -std::numeric_limits<double>::infinity()) {
            ++ct.zero_count;
            continue;
        }
        ct.s1[k] = g1.neg_log_cdf(x1);
        ct.f1[k] = std::exp(lj - ct.s1[k]);
        ct.denom += ct.f1[k];
    }
    if (!(ct.denom > 0.0)) {
        std::ostringstream msg;
        msg << "conditional predictive: every posterior draw puts zero marginal density at x1 = "
            << x1 << "; cannot condition on an impossible value";
        throw std::domain_error(msg.str());
    }
    return ct;
}

}  // namespace detail

/// Monte-Carlo average of the fully observed density branch over the draws
/// of a trace, evaluated on the product of the two axes.
inline PredictiveGrid joint_predictive(const Trace& trace, std::vector<double> x1_axis,
                                       std::vector<double> x2_axis) {
    detail::require_axis(x1_axis, "x1");
    detail::require_axis(x2_axis, "x2");
    const auto [u1, u2] = detail::require_common_thresholds(trace);
    const auto measures = detail::trace_measures(trace);

    PredictiveGrid grid;
    grid.x1 = std::move(x1_axis);
    grid.x2 = std::move(x2_axis);
    grid.draws = trace.records.size();
    grid.density.assign(grid.x1.size(), std::vector<double>(grid.x2.size(), 0.0));
    for (std::size_t i = 0; i < grid.x1.size(); ++i)
        for (std::size_t j = 0; j < grid.x2.size(); ++j)
            if (grid.x1[i] < u1 || grid.x2[j] < u2) ++grid.skipped_cells;

    for (std::size_t k = 0; k < trace.records.size(); ++k) {
        const auto& rec = trace.records[k];
        grid.corner_mass += std::exp(-ell(measures[k], rec.g1.zeta, rec.g2.zeta));
        for (std::size_t i = 0; i < grid.x1.size(); ++i) {
            if (grid.x1[i] < u1) continue;
            for (std::size_t j = 0; j < grid.x2.size(); ++j) {
                if (grid.x2[j] < u2) continue;
                const CensoredObservation obs{grid.x1[i], grid.x2[j], true, true};
                grid.density[i][j] += std::exp(log_censored_density(obs, measures[k], rec.g1, rec.g2));
            }
        }
    }
    const double n = static_cast<double>(grid.draws);
    grid.corner_mass /= n;
    for (auto& row : grid.density)
        for (double& v : row) v /= n;
    return grid;
}

/// Conditional predictive density and CDF of X2 at X1 = x1, evaluated on a
/// grid that starts at or above the second threshold.  The denominator is
/// the predictive marginal density of X1, i.e. the average over draws of the
/// fully observed margin-1 density (the x2 -> infinity limit of the
/// half-censored branch).
inline ConditionalPredictive conditional_predictive(const Trace& trace, double x1,
                                                    std::vector<double> x2_grid) {
    detail::require_axis(x2_grid, "x2");
    auto ct = detail::conditional_terms(trace, x1);
    if (x2_grid.front() < ct.u2)
        throw std::invalid_argument("conditional predictive: x2 grid must start at or above the second threshold");

    ConditionalPredictive out;
    out.x1 = x1;
    out.x2 = std::move(x2_grid);
    out.draws = trace.records.size();
    out.zero_marginal_draws = ct.zero_count;
    out.marginal_density = ct.denom / static_cast<double>(out.draws);
    out.below_threshold_mass = ct.cdf_numerator(ct.u2) / ct.denom;
    out.density.resize(out.x2.size());
    out.cdf.resize(out.x2.size());
    for (std::size_t j = 0; j < out.x2.size(); ++j) {
        out.density[j] = ct.density_numerator(out.x2[j]) / ct.denom;
        out.cdf[j] = ct.cdf_numerator(out.x2[j]) / ct.denom;
    }
    return out;
}

/// Smallest x2 with P(X2 > x2 | X1 = x1, data) = p, found by bisection on
/// the monotone conditional survival function (absolute tolerance 1e-6 in
/// probability).  With given_exceedance the probability is interpreted
/// conditionally on X2 > u2, i.e. the equation becomes
/// P(X2 > x2 | X1 = x1, X2 > u2, data) = p.
inline double conditional_quantile(const Trace& trace, double x1, double p,
                                   bool given_exceedance = false) {
    auto ct = detail::conditional_terms(trace, x1);
    const double s_at_u2 = ct.survival(ct.u2);
    if (!(p > 0.0))
        throw std::out_of_range("conditional_quantile: p must be positive");
    double target = p;
    if (given_exceedance) {
        if (p > 1.0)
            throw std::out_of_range("conditional_quantile: exceedance probability above 1");
        if (p == 1.0) return ct.u2;
        target = p * s_at_u2;
    } else {
        if (p > s_at_u2) {
            std::ostringstream msg;
            msg << "conditional_quantile: p = " << p
                << " exceeds the attainable conditional exceedance probability " << s_at_u2
                << " at x1 = " << x1;
            throw std::out_of_range(msg.str());
        }
        if (p == s_at_u2) return ct.u2;
    }

    double scale = 0.0;
    for (std::size_t k = 0; k < ct.f1.size(); ++k)
        if (ct.f1[k] > 0.0) scale = std::max(scale, trace.records[k].g2.sigma);
    if (scale <= 0.0) scale = 1.0;

    double lo = ct.u2;
    double hi = ct.u2 + scale;
    int guard = 0;
    while (ct.survival(hi) > target) {
        hi = ct.u2 + 2.0 * (hi - ct.u2);
        if (++guard > 200)
            throw std::runtime_error("conditional_quantile: failed to bracket the quantile");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (ct.survival(mid) > target)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

/// Per-draw conditional quantiles at the same (x1, p), for credible bands.
/// Draws with zero marginal density at x1, and (without given_exceedance)
/// draws whose own conditional exceedance probability falls below p, have
/// no solution and are skipped.
inline std::vector<double> conditional_quantile_per_draw(const Trace& trace, double x1, double p,
                                                         bool given_exceedance = false) {
    detail::require_common_thresholds(trace);
    std::vector<double> out;
    out.reserve(trace.records.size());
    Trace one;
    one.records.resize(1);
    for (const auto& rec : trace.records) {
        one.records[0] = rec;
        try {
            out.push_back(conditional_quantile(one, x1, p, given_exceedance));
        } catch (const std::out_of_range&) {
        } catch (const std::domain_error&) {
        }
    }
    return out;
}

/// Predictive probability of the joint exceedance region [v1,inf) x [v2,inf),
/// averaged over draws via inclusion-exclusion on the model CDF.
inline double rare_event_probability(const Trace& trace, double v1, double v2) {
    detail::require_common_thresholds(trace);
    const auto measures = detail::trace_measures(trace);
    double acc = 0.0;
    for (std::size_t k = 0; k < trace.records.size(); ++k) {
        const auto& rec = trace.records[k];
        const double s = rec.g1.neg_log_cdf(v1);
        const double t = rec.g2.neg_log_cdf(v2);
        const double term = 1.0 - std::exp(-s) - std::exp(-t) + std::exp(-ell(measures[k], s, t));
        acc += std::max(0.0, term);
    }
    return std::min(1.0, acc / static_cast<double>(trace.records.size()));
}

}  // namespace bivex
