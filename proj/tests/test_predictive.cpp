#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "bivex/predictive.hpp"
#include "bivex/quadrature.hpp"

using namespace bivex;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

TraceRecord make_record(const SpectralParams& theta, const MarginParams& g1,
                        const MarginParams& g2) {
    TraceRecord rec;
    rec.theta = theta;
    rec.g1 = g1;
    rec.g2 = g2;
    return rec;
}

Trace make_trace(std::vector<TraceRecord> records) {
    Trace tr;
    tr.records = std::move(records);
    return tr;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1.0);
    return out;
}

double draw_density(const SpectralMeasure& H, const MarginParams& g1, const MarginParams& g2,
                    double x1, double x2) {
    return std::exp(log_censored_density({x1, x2, true, true}, H, g1, g2));
}

double draw_marginal(const MarginParams& g, double x) {
    return std::exp(g.log_jacobian(x) - g.neg_log_cdf(x));
}

double draw_cdf_slope(const SpectralMeasure& H, const MarginParams& g1, const MarginParams& g2,
                      double x1, double x2) {
    const double s = g1.neg_log_cdf(x1);
    const EllDerivs e = ell_with_partials(H, s, g2.neg_log_cdf(x2));
    return std::exp(g1.log_jacobian(x1) - e.value) * e.ds;
}

const SpectralParams thetaA{0.1, {0.1, 0.3, 0.6}, 0.3};
const SpectralParams thetaB{0.2, {0.3, 0.7}, 0.2};
const MarginParams g1A{0.10, 0.12, 1.3, 10.0};
const MarginParams g2A{-0.15, 0.09, 2.0, 8.0};
const MarginParams g1B{0.05, 0.10, 1.0, 10.0};
const MarginParams g2B{0.20, 0.14, 1.5, 8.0};

}  // namespace

TEST_CASE("a single-draw trace reproduces that draw's tail law exactly", "[predictive]") {
    const auto trace = make_trace({make_record(thetaA, g1A, g2A)});
    const SpectralMeasure H(thetaA);
    const std::vector<double> ax1{10.0, 11.5, 14.0};
    const std::vector<double> ax2{8.0, 9.0, 12.0, 20.0};

    SECTION("joint density surface and corner mass") {
        const auto grid = joint_predictive(trace, ax1, ax2);
        REQUIRE(grid.draws == 1);
        REQUIRE(grid.skipped_cells == 0);
        for (std::size_t i = 0; i < ax1.size(); ++i)
            for (std::size_t j = 0; j < ax2.size(); ++j) {
                REQUIRE(grid.density[i][j] == draw_density(H, g1A, g2A, ax1[i], ax2[j]));
                REQUIRE(grid.density[i][j] >= 0.0);
            }
        REQUIRE(grid.corner_mass == std::exp(-ell(H, g1A.zeta, g2A.zeta)));
    }

    SECTION("cells below a threshold are skipped, not evaluated") {
        const auto grid = joint_predictive(trace, {9.0, 11.0}, {7.5, 9.5});
        REQUIRE(grid.skipped_cells == 3);
        REQUIRE(grid.density[0][0] == 0.0);
        REQUIRE(grid.density[0][1] == 0.0);
        REQUIRE(grid.density[1][0] == 0.0);
        REQUIRE(grid.density[1][1] > 0.0);
    }

    SECTION("conditional density, CDF, and deficit match the draw's law") {
        const double x1c = 11.0;
        const auto cond = conditional_predictive(trace, x1c, ax2);
        const double f1 = draw_marginal(g1A, x1c);
        REQUIRE(cond.zero_marginal_draws == 0);
        REQUIRE(cond.marginal_density == Approx(f1).epsilon(1e-14));
        for (std::size_t j = 0; j < ax2.size(); ++j) {
            REQUIRE(cond.density[j] ==
                    Approx(draw_density(H, g1A, g2A, x1c, ax2[j]) / f1).epsilon(1e-12));
            REQUIRE(cond.cdf[j] ==
                    Approx(draw_cdf_slope(H, g1A, g2A, x1c, ax2[j]) / f1).epsilon(1e-12));
            if (j > 0) REQUIRE(cond.cdf[j] >= cond.cdf[j - 1]);
        }
        REQUIRE(cond.cdf.front() == cond.below_threshold_mass);
        REQUIRE(cond.below_threshold_mass > 0.0);
        REQUIRE(cond.below_threshold_mass < 1.0);
        const double total = 1.0 - cond.below_threshold_mass;
        REQUIRE(cond.exceedance_cdf(0) == 0.0);
        REQUIRE(cond.exceedance_density(1) == Approx(cond.density[1] / total));
    }

    SECTION("rare-event probability matches inclusion-exclusion") {
        const double s = g1A.neg_log_cdf(12.0), t = g2A.neg_log_cdf(10.0);
        const double expected = 1.0 - std::exp(-s) - std::exp(-t) + std::exp(-ell(H, s, t));
        REQUIRE(rare_event_probability(trace, 12.0, 10.0) == Approx(expected).epsilon(1e-14));
    }

    SECTION("input validation") {
        REQUIRE_THROWS_AS(joint_predictive(make_trace({}), ax1, ax2), std::invalid_argument);
        REQUIRE_THROWS_AS(joint_predictive(trace, {11.0, 11.0}, ax2), std::invalid_argument);
        REQUIRE_THROWS_AS(joint_predictive(trace, ax1, {}), std::invalid_argument);
        REQUIRE_THROWS_AS(conditional_predictive(trace, 9.9, ax2), std::invalid_argument);
        REQUIRE_THROWS_AS(conditional_predictive(trace, 11.0, {7.0, 9.0}), std::invalid_argument);
        auto other = make_record(thetaB, g1B, g2B);
        other.g2.u = 8.5;
        const auto bad = make_trace({make_record(thetaA, g1A, g2A), other});
        REQUIRE_THROWS_AS(joint_predictive(bad, ax1, ax2), std::invalid_argument);
    }
}

TEST_CASE("predictive averages are exactly linear in the draws", "[predictive]") {
    const auto recA = make_record(thetaA, g1A, g2A);
    const auto recB = make_record(thetaB, g1B, g2B);
    const auto tA = make_trace({recA});
    const auto tB = make_trace({recB});
    const auto tAB = make_trace({recA, recB});
    const auto tAAB = make_trace({recA, recA, recB});
    const std::vector<double> ax1{10.0, 12.0};
    const std::vector<double> ax2{8.0, 10.0, 15.0};

    SECTION("joint grid is the arithmetic mean of the draw surfaces") {
        const auto gA = joint_predictive(tA, ax1, ax2);
        const auto gB = joint_predictive(tB, ax1, ax2);
        const auto gAB = joint_predictive(tAB, ax1, ax2);
        const auto gAAB = joint_predictive(tAAB, ax1, ax2);
        for (std::size_t i = 0; i < ax1.size(); ++i)
            for (std::size_t j = 0; j < ax2.size(); ++j) {
                REQUIRE(gAB.density[i][j] == (gA.density[i][j] + gB.density[i][j]) / 2.0);
                REQUIRE(gAAB.density[i][j] ==
                        (2.0 * gA.density[i][j] + gB.density[i][j]) / 3.0);
            }
        REQUIRE(gAB.corner_mass == (gA.corner_mass + gB.corner_mass) / 2.0);
    }

    SECTION("rare-event probability averages per-draw values") {
        const double eA = rare_event_probability(tA, 11.0, 9.0);
        const double eB = rare_event_probability(tB, 11.0, 9.0);
        REQUIRE(rare_event_probability(tAB, 11.0, 9.0) == (eA + eB) / 2.0);
    }

    SECTION("conditional density is a ratio of averaged numerators") {
        const double x1c = 11.0;
        const SpectralMeasure HA(thetaA), HB(thetaB);
        const double f1a = draw_marginal(g1A, x1c);
        const double f1b = draw_marginal(g1B, x1c);
        const auto cond = conditional_predictive(tAB, x1c, ax2);
        REQUIRE(cond.marginal_density == Approx((f1a + f1b) / 2.0).epsilon(1e-14));
        for (std::size_t j = 0; j < ax2.size(); ++j) {
            const double num = draw_density(HA, g1A, g2A, x1c, ax2[j]) +
                               draw_density(HB, g1B, g2B, x1c, ax2[j]);
            REQUIRE(cond.density[j] == Approx(num / (f1a + f1b)).epsilon(1e-12));
            const double slope = draw_cdf_slope(HA, g1A, g2A, x1c, ax2[j]) +
                                 draw_cdf_slope(HB, g1B, g2B, x1c, ax2[j]);
            REQUIRE(cond.cdf[j] == Approx(slope / (f1a + f1b)).epsilon(1e-12));
        }
    }

    SECTION("draws beyond their support drop out with a count") {
        auto shortTail = recA;
        shortTail.g1 = MarginParams{-0.5, 0.1, 1.0, 10.0};  // endpoint at 12
        const auto mixed = make_trace({shortTail, recB});
        const auto cond = conditional_predictive(mixed, 13.0, {8.0, 10.0});
        REQUIRE(cond.zero_marginal_draws == 1);
        const double f1b = draw_marginal(g1B, 13.0);
        REQUIRE(cond.marginal_density == Approx(f1b / 2.0).epsilon(1e-14));
        const SpectralMeasure HB(thetaB);
        REQUIRE(cond.density[1] ==
                Approx(draw_density(HB, g1B, g2B, 13.0, 10.0) / f1b).epsilon(1e-12));
        const auto hopeless = make_trace({shortTail});
        REQUIRE_THROWS_AS(conditional_predictive(hopeless, 13.0, {8.0}), std::domain_error);
    }
}

TEST_CASE("conditional mass plus the censored deficit accounts for one", "[predictive]") {
    const auto trace = make_trace({make_record(thetaA, g1A, g2A), make_record(thetaB, g1B, g2B)});
    const double x1c = 11.0;
    const double u2 = 8.0;
    double upper = 0.0;
    for (const auto& rec : trace.records)
        upper = std::max(upper, rec.g2.quantile(1.0 - 1e-6));
    REQUIRE(std::isfinite(upper));

    const auto density_at = [&](double x2) {
        return conditional_predictive(trace, x1c, {x2}).density[0];
    };
    const double integral = adaptive_simpson(density_at, u2, upper, 1e-9);
    const double deficit = conditional_predictive(trace, x1c, {u2}).below_threshold_mass;
    REQUIRE(integral + deficit == Approx(1.0).margin(1e-3));
    REQUIRE(integral + deficit <= 1.0 + 1e-6);

    const double cdf_upper = conditional_predictive(trace, x1c, {upper}).cdf[0];
    REQUIRE(cdf_upper == Approx(deficit + integral).margin(1e-6));
}

TEST_CASE("near-independent spectra factorize the predictive tail", "[predictive]") {
    const SpectralParams thetaI{0.4999, {0.5}, 0.4999};
    const MarginParams gI1{0.1, 0.1, 1.0, 10.0};
    const MarginParams gI2{0.1, 0.1, 1.0, 8.0};
    const auto trace = make_trace({make_record(thetaI, gI1, gI2)});

    SECTION("joint exceedance of both thresholds approximates the product") {
        const double one = 1.0 - std::exp(-0.1);
        REQUIRE(rare_event_probability(trace, 10.0, 8.0) == Approx(one * one).margin(5e-5));
    }

    SECTION("joint density approximates the product of the marginals") {
        const auto ax1 = linspace(10.0, 14.0, 5);
        const auto ax2 = linspace(8.0, 12.0, 5);
        const auto grid = joint_predictive(trace, ax1, ax2);
        for (std::size_t i = 0; i < ax1.size(); ++i)
            for (std::size_t j = 0; j < ax2.size(); ++j) {
                const double product = draw_marginal(gI1, ax1[i]) * draw_marginal(gI2, ax2[j]);
                REQUIRE(grid.density[i][j] == Approx(product).epsilon(0.05));
            }
    }

    SECTION("conditional law barely depends on the conditioning value") {
        const auto ax2 = linspace(8.0, 13.0, 6);
        const auto near = conditional_predictive(trace, 10.5, ax2);
        const auto far = conditional_predictive(trace, 13.0, ax2);
        for (std::size_t j = 0; j < ax2.size(); ++j) {
            REQUIRE(near.density[j] == Approx(far.density[j]).epsilon(0.02));
            REQUIRE(near.density[j] == Approx(draw_marginal(gI2, ax2[j])).epsilon(0.05));
        }
        const double q_near = conditional_quantile(trace, 10.5, 0.05);
        const double q_far = conditional_quantile(trace, 13.0, 0.05);
        REQUIRE(q_near == Approx(q_far).epsilon(0.01));
    }
}

TEST_CASE("conditional quantiles invert the conditional survival", "[predictive]") {
    const auto recA = make_record(thetaA, g1A, g2A);
    const auto recB = make_record(thetaB, g1B, g2B);
    const auto trace = make_trace({recA, recB});
    const double x1c = 11.5;
    const double u2 = 8.0;
    const double su2 = 1.0 - conditional_predictive(trace, x1c, {u2}).cdf[0];
    REQUIRE(su2 > 0.0);
    REQUIRE(su2 < 1.0);

    SECTION("round trip through the conditional CDF") {
        for (const double p : {0.8 * su2, 0.5 * su2, 0.1 * su2, 0.01}) {
            const double q = conditional_quantile(trace, x1c, p);
            REQUIRE(q >= u2);
            const double back = 1.0 - conditional_predictive(trace, x1c, {q}).cdf[0];
            REQUIRE(back == Approx(p).margin(1e-5));
        }
    }

    SECTION("boundary and range errors") {
        REQUIRE(conditional_quantile(trace, x1c, su2) == u2);
        REQUIRE_THROWS_AS(conditional_quantile(trace, x1c, su2 + 0.02), std::out_of_range);
        REQUIRE_THROWS_WITH(conditional_quantile(trace, x1c, su2 + 0.02),
                            ContainsSubstring("attainable"));
        REQUIRE_THROWS_AS(conditional_quantile(trace, x1c, 0.0), std::out_of_range);
        REQUIRE_THROWS_AS(conditional_quantile(trace, x1c, 1.2, true), std::out_of_range);
    }

    SECTION("exceedance-conditional version rescales the same survival") {
        REQUIRE(conditional_quantile(trace, x1c, 0.5, true) ==
                conditional_quantile(trace, x1c, 0.5 * su2));
        REQUIRE(conditional_quantile(trace, x1c, 1.0, true) == u2);
    }

    SECTION("per-draw quantiles solve each draw separately") {
        const auto qs = conditional_quantile_per_draw(trace, x1c, 0.03);
        REQUIRE(qs.size() == 2);
        const auto tA = make_trace({recA});
        REQUIRE(qs[0] == conditional_quantile(tA, x1c, 0.03));
        const double back = 1.0 - conditional_predictive(tA, x1c, {qs[0]}).cdf[0];
        REQUIRE(back == Approx(0.03).margin(1e-5));

        const double sA = 1.0 - conditional_predictive(tA, x1c, {u2}).cdf[0];
        const auto tB = make_trace({recB});
        const double sB = 1.0 - conditional_predictive(tB, x1c, {u2}).cdf[0];
        const double between = 0.5 * (std::min(sA, sB) + std::max(sA, sB));
        REQUIRE(conditional_quantile_per_draw(trace, x1c, between).size() == 1);
        REQUIRE(conditional_quantile_per_draw(trace, x1c, between, true).size() == 2);
    }
}

TEST_CASE("rare-event surfaces decay monotonically in both coordinates", "[predictive]") {
    const auto trace = make_trace({make_record(thetaA, g1A, g2A), make_record(thetaB, g1B, g2B)});
    const auto v1 = linspace(10.0, 18.0, 20);
    const auto v2 = linspace(8.0, 25.0, 20);

    std::vector<std::vector<double>> prob(v1.size(), std::vector<double>(v2.size()));
    for (std::size_t i = 0; i < v1.size(); ++i)
        for (std::size_t j = 0; j < v2.size(); ++j)
            prob[i][j] = rare_event_probability(trace, v1[i], v2[j]);

    for (std::size_t i = 0; i < v1.size(); ++i)
        for (std::size_t j = 0; j < v2.size(); ++j) {
            REQUIRE(prob[i][j] >= 0.0);
            REQUIRE(prob[i][j] <= 1.0);
            if (i > 0) REQUIRE(prob[i][j] <= prob[i - 1][j] + 1e-12);
            if (j > 0) REQUIRE(prob[i][j] <= prob[i][j - 1] + 1e-12);
            double marg1 = 0.0, marg2 = 0.0;
            for (const auto& rec : trace.records) {
                marg1 += 1.0 - std::exp(-rec.g1.neg_log_cdf(v1[i]));
                marg2 += 1.0 - std::exp(-rec.g2.neg_log_cdf(v2[j]));
            }
            REQUIRE(prob[i][j] <= marg1 / 2.0 + 1e-12);
            REQUIRE(prob[i][j] <= marg2 / 2.0 + 1e-12);
        }

    // as one coordinate diverges the joint exceedance falls below that
    // coordinate's vanishing marginal exceedance
    REQUIRE(rare_event_probability(trace, 11.0, 1e8) < 1e-12);
}

TEST_CASE("spectra concentrated at the center give the min structure", "[predictive]") {
    std::vector<double> cluster;
    for (int k = -24; k <= 24; ++k) cluster.push_back(0.5 + 0.0005 * k);
    const SpectralParams thetaC{0.0, cluster, 0.0};
    const MarginParams g{0.1, 0.12, 1.0, 9.0};
    const auto comon = make_trace({make_record(thetaC, g, g)});

    const SpectralParams thetaI{0.4999, {0.5}, 0.4999};
    const auto indep = make_trace({make_record(thetaI, g, g)});

    const double v = 10.2;
    const double s = g.neg_log_cdf(v);
    const double marginal = 1.0 - std::exp(-s);
    const double p_min = rare_event_probability(comon, v, v);
    const double p_prod = rare_event_probability(indep, v, v);
    REQUIRE(p_min <= marginal + 1e-12);
    REQUIRE(p_min == Approx(marginal).epsilon(0.05));
    REQUIRE(p_prod == Approx(marginal * marginal).epsilon(0.05));
    REQUIRE(p_min > 5.0 * p_prod);
}
