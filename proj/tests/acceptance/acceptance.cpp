#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bivex/data.hpp"
#include "bivex/mcmc.hpp"
#include "bivex/predictive.hpp"
#include "bivex/quadrature.hpp"
#include "bivex/spectral.hpp"
#include "bivex/stats.hpp"
#include "bivex/synthetic.hpp"
#include "bivex/tail.hpp"

#include "support/oracles.hpp"

using bivex::CensoredSample;
using bivex::MarginParams;
using bivex::McmcConfig;
using bivex::SpectralMeasure;
using bivex::SpectralParams;
using bivex::Trace;
using Catch::Approx;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> uniform_grid(std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

} // namespace

TEST_CASE("criterion 1: discretization meets the sup-distance bounds", "[acceptance][c1]") {
    const auto t0 = Clock::now();
    auto id = [](double w) { return w; };
    auto id_int = [](double a, double b) { return 0.5 * (b * b - a * a); };
    const int grid_n = 10000;
    for (double r : {0.2, 0.5, 0.8}) {
        const double h = 0.5 * (1.0 - r); // boundary masses of the synthetic family
        for (int m : {2, 5, 10, 20}) {
            const SpectralParams p = bivex::discretize_measure(h, h, id, id_int, m);
            const SpectralMeasure H(p);
            double sup_step = 0.0, sup_smooth = 0.0;
            for (int k = 0; k < grid_n; ++k) {
                const double w = static_cast<double>(k) / (grid_n - 1);
                const double truth = bivex::hr_cdf(w, r);
                sup_step = std::max(sup_step, std::abs(bivex::step_cdf(p, w) - truth));
                sup_smooth = std::max(sup_smooth, std::abs(H.cdf(w) - truth));
            }
            INFO("r = " << r << ", m = " << m << ": step " << sup_step << ", smooth "
                        << sup_smooth);
            CHECK(sup_step <= r / m + 1e-10);
            CHECK(sup_smooth <= 2.0 * r / m + 1e-10);
        }
    }
    CHECK(seconds_since(t0) < 1.0);
}

TEST_CASE("criterion 2: normalizers agree with surface-measure simulation", "[acceptance][c2]") {
    const auto t0 = Clock::now();

    // one interior atom: the configuration space is the (h0,h1) square
    CHECK(bivex::theta_normalizer(1) == 0.25);

    // quadrature against a direct Monte Carlo estimate of the surface volume:
    // draw the free coordinates uniformly, count how often the dependent atom
    // lands inside (0,1), rescale by the slice tilt and the atom ordering
    bivex::Rng rng(220822);
    for (int m = 2; m <= 6; ++m) {
        const int n = 2000000;
        std::int64_t inside = 0;
        for (int i = 0; i < n; ++i) {
            const double h0 = rng.uniform(0.0, 0.5), h1 = rng.uniform(0.0, 0.5);
            const double ybar = (0.5 - h1) / (1.0 - h0 - h1);
            double sum = 0.0;
            for (int j = 0; j + 1 < m; ++j) sum += rng.uniform();
            const double last = m * ybar - sum;
            inside += (last > 0.0 && last < 1.0);
        }
        double fact = 1.0;
        for (int j = 2; j <= m; ++j) fact *= j;
        const double oracle = 0.25 * std::sqrt(static_cast<double>(m)) / fact *
                              (static_cast<double>(inside) / n);
        const double quad = bivex::theta_normalizer(m);
        INFO("m = " << m << ": quadrature " << quad << " vs simulation " << oracle);
        CHECK(std::abs(quad - oracle) <= 0.01 * oracle);
    }

    // closed-form law of the largest simplex coordinate against simulation
    std::vector<double> scratch;
    for (int m = 2; m <= 8; ++m) {
        const int n = 1000000;
        std::vector<double> draws(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            draws[static_cast<std::size_t>(i)] = oracles::simplex_max_draw(m, rng, scratch);
        for (double t : {0.15, 0.3, 0.5}) {
            const double y = 1.0 / m + t * (1.0 - 1.0 / m);
            double count = 0.0;
            for (double d : draws) count += (d <= y);
            const double phat = count / n;
            const double se = std::sqrt(phat * (1.0 - phat) / n);
            INFO("m = " << m << ", y = " << y << ": formula " << bivex::simplex_max_cdf(m, y)
                        << " vs simulation " << phat);
            CHECK(std::abs(bivex::simplex_max_cdf(m, y) - phat) <= 3.0 * se);
        }
    }

    CHECK(seconds_since(t0) < 120.0);
}

TEST_CASE("criterion 3: censored density matches the joint law", "[acceptance][c3]") {
    const auto t0 = Clock::now();

    const SpectralMeasure Ha(SpectralParams{0.1, {0.1, 0.3, 0.6}, 0.3});
    const SpectralMeasure Hb(
        SpectralParams{0.05, {0.05, 0.15, 0.35, 0.5, 25.0 / 14.0 - 1.05}, 0.25});
    const MarginParams g1a{0.4, 0.3, 1.5, 2.0}, g2a{0.1, 0.2, 0.8, 1.0};
    const MarginParams g1b{-0.2, 0.25, 1.2, 1.0}, g2b{0.3, 0.15, 0.9, 0.5};

    bivex::Rng rng(4711);

    // fully observed branch against mixed finite differences of the joint CDF
    auto mixed_check = [&rng](const SpectralMeasure& H, const MarginParams& g1,
                              const MarginParams& g2, double off_lo, double off_hi) {
        auto F = [&](double x1, double x2) {
            return std::exp(-bivex::ell(H, g1.neg_log_cdf(x1), g2.neg_log_cdf(x2)));
        };
        for (int rep = 0; rep < 50; ++rep) {
            const double x1 = g1.u + rng.uniform(off_lo, off_hi);
            const double x2 = g2.u + rng.uniform(0.3, 6.0);
            const double h1 = 1e-3 * (x1 - g1.u + g1.sigma);
            const double h2 = 1e-3 * (x2 - g2.u + g2.sigma);
            const double fd = oracles::diff2_mixed(F, x1, x2, h1, h2);
            const double f = bivex::censored_density({x1, x2, true, true}, H, g1, g2);
            INFO("x1 = " << x1 << ", x2 = " << x2);
            CHECK(f == Approx(fd).epsilon(1e-4));
        }
    };
    mixed_check(Ha, g1a, g2a, 0.3, 6.0);
    mixed_check(Hb, g1b, g2b, 0.2, 3.0); // short-tailed first margin, points inside the support

    // analytic partials of the tail dependence function against differences
    for (const SpectralMeasure* H : {&Ha, &Hb}) {
        for (int rep = 0; rep < 20; ++rep) {
            const double s = rng.uniform(0.05, 2.5), t = rng.uniform(0.05, 2.5);
            const bivex::EllDerivs e = bivex::ell_with_partials(*H, s, t);
            auto f = [&](double a, double b) { return bivex::ell(*H, a, b); };
            const double h = 1e-4 * (s + t), hm = 2e-4 * (s + t);
            INFO("s = " << s << ", t = " << t);
            CHECK(e.ds ==
                  Approx(oracles::diff1([&](double a) { return f(a, t); }, s, h)).epsilon(1e-5));
            CHECK(e.dt ==
                  Approx(oracles::diff1([&](double b) { return f(s, b); }, t, h)).epsilon(1e-5));
            CHECK(e.dst ==
                  Approx(oracles::diff2_mixed(f, s, t, hm, hm)).epsilon(1e-5).margin(1e-9));
        }
    }

    // the four quadrant probabilities partition the whole mass
    auto partition = [](const SpectralMeasure& H, const MarginParams& g1,
                        const MarginParams& g2) {
        const double s_cut = 1e-5; // truncate each tail where 1e-5 mass remains
        const double q1 = g1.quantile(std::exp(-s_cut)), q2 = g2.quantile(std::exp(-s_cut));
        const double p00 = bivex::censored_density({g1.u, g2.u, false, false}, H, g1, g2);
        const double p10 = bivex::adaptive_simpson(
            [&](double x1) { return bivex::censored_density({x1, g2.u, true, false}, H, g1, g2); },
            g1.u, q1, 1e-9);
        const double p01 = bivex::adaptive_simpson(
            [&](double x2) { return bivex::censored_density({g1.u, x2, false, true}, H, g1, g2); },
            g2.u, q2, 1e-9);
        const double p11 = bivex::adaptive_simpson(
            [&](double x1) {
                return bivex::adaptive_simpson(
                    [&](double x2) {
                        return bivex::censored_density({x1, x2, true, true}, H, g1, g2);
                    },
                    g2.u, q2, 1e-9);
            },
            g1.u, q1, 1e-7);
        return p00 + p10 + p01 + p11;
    };
    CHECK(partition(Ha, g1a, g2a) == Approx(1.0).margin(1e-3));
    CHECK(partition(Hb, g1b, g2b) == Approx(1.0).margin(1e-3));

    CHECK(seconds_since(t0) < 60.0);
}

TEST_CASE("criterion 4: prior-only chain reproduces the direct prior", "[acceptance][c4]") {
    const auto t0 = Clock::now();

    McmcConfig cfg;
    cfg.prior_only = true;
    cfg.lambda = 3.0;
    cfg.thin = 100;
    cfg.burn_in = 200000;
    cfg.iterations = cfg.burn_in + 100000 * cfg.thin;
    cfg.seed = 90210;
    const Trace tr = bivex::run_chain(CensoredSample{}, cfg);
    REQUIRE(tr.records.size() == 100000);

    std::uint64_t total = 0;
    for (const auto& [m, count] : tr.occupancy) {
        REQUIRE(m >= 1);
        total += count;
    }
    REQUIRE(total == tr.records.size());

    // occupancy chi-square against the zero-truncated Poisson, 1% level
    const int cut = 9; // lump the tail so every expected count stays large
    std::vector<double> expected(static_cast<std::size_t>(cut) + 1, 0.0);
    std::vector<double> observed(static_cast<std::size_t>(cut) + 1, 0.0);
    double tail_p = 1.0;
    for (int m = 1; m < cut; ++m) {
        const double pm = oracles::truncated_poisson_pmf(m, cfg.lambda);
        expected[static_cast<std::size_t>(m)] = pm * static_cast<double>(total);
        tail_p -= pm;
    }
    expected[static_cast<std::size_t>(cut)] = tail_p * static_cast<double>(total);
    for (const auto& [m, count] : tr.occupancy)
        observed[static_cast<std::size_t>(std::min(m, cut))] += static_cast<double>(count);
    double stat = 0.0;
    for (int m = 1; m <= cut; ++m) {
        const double e = expected[static_cast<std::size_t>(m)];
        REQUIRE(e > 50.0);
        const double d = observed[static_cast<std::size_t>(m)] - e;
        stat += d * d / e;
    }
    INFO("chi-square " << stat << " on " << cut - 1 << " df");
    CHECK(stat < oracles::chi2_quantile(0.99, static_cast<double>(cut - 1)));

    // pointwise prior mean of the angular CDF against direct draws
    std::vector<double> grid(50);
    for (std::size_t g = 0; g < grid.size(); ++g)
        grid[g] = (static_cast<double>(g) + 0.5) / 50.0;
    const bivex::BayesEstimate est = bivex::bayes_estimate(tr, grid);

    bivex::Rng rng(777);
    std::vector<double> direct(grid.size(), 0.0);
    const int n_direct = 100000;
    for (int i = 0; i < n_direct; ++i) {
        const int m = oracles::sample_truncated_poisson(cfg.lambda, rng);
        const SpectralMeasure sm(oracles::sample_theta_prior(m, rng));
        for (std::size_t g = 0; g < grid.size(); ++g) direct[g] += sm.cdf(grid[g]);
    }
    double maxdev = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g)
        maxdev = std::max(maxdev, std::abs(est.mean[g] - direct[g] / n_direct));
    INFO("max pointwise deviation " << maxdev);
    CHECK(maxdev <= 0.02);

    CHECK(seconds_since(t0) < 600.0);
}

TEST_CASE("criterion 5: posterior recovers the synthetic dependence", "[acceptance][c5]") {
    const std::vector<double> grid = uniform_grid(101);
    const double rs[] = {0.2, 0.4, 0.6, 0.8};
    const std::uint64_t seeds[] = {2, 4, 1, 4};
    for (int i = 0; i < 4; ++i) {
        const auto t0 = Clock::now();
        const double r = rs[i];
        const auto rows = bivex::sample_fr({r, 1000, seeds[i]});
        const auto [u1, u2] = bivex::quantile_thresholds(rows, 0.9);
        const CensoredSample data = bivex::censor_sample(rows, u1, u2);

        McmcConfig cfg;
        cfg.iterations = 200000;
        cfg.burn_in = 50000;
        cfg.thin = 10;
        cfg.seed = 61;
        const Trace tr = bivex::run_chain(data, cfg);

        const bivex::BayesEstimate est = bivex::bayes_estimate(tr, grid);
        double sup = 0.0;
        int covered = 0;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const double truth = bivex::hr_cdf(grid[g], r);
            sup = std::max(sup, std::abs(est.mean[g] - truth));
            covered += (est.lower[g] - 1e-12 <= truth && truth <= est.upper[g] + 1e-12);
        }
        const double coverage = static_cast<double>(covered) / static_cast<double>(grid.size());
        INFO("r = " << r << ": sup distance " << sup << ", band coverage " << coverage);
        CHECK(sup <= 0.10);
        CHECK(coverage >= 0.85);
        CHECK(seconds_since(t0) < 1800.0);
    }
}

TEST_CASE("criterion 6: conditional quantiles track the dependence", "[acceptance][c6]") {
    const auto t0 = Clock::now();

    auto fit = [](double r, std::uint64_t seed) {
        const auto rows = bivex::sample_fr({r, 1000, seed});
        const auto [u1, u2] = bivex::quantile_thresholds(rows, 0.9);
        McmcConfig cfg;
        cfg.iterations = 300000;
        cfg.burn_in = 50000;
        cfg.thin = 25;
        cfg.seed = seed + 7;
        return bivex::run_chain(bivex::censor_sample(rows, u1, u2), cfg);
    };
    auto curve = [](const Trace& tr, const std::vector<double>& xs) {
        std::vector<double> q;
        for (double x1 : xs) q.push_back(bivex::conditional_quantile(tr, x1, 0.5, true));
        return q;
    };
    auto x1_grid = [](const Trace& tr) {
        const double u1 = tr.records.front().g1.u;
        return std::vector<double>{1.05 * u1, 1.4 * u1, 2.0 * u1, 3.5 * u1, 6.0 * u1};
    };

    {
        // independent truth: the curve stays inside the posterior band
        const Trace tr = fit(0.0, 424242);
        const std::vector<double> xs = x1_grid(tr);
        const std::vector<double> q = curve(tr, xs);
        std::vector<double> per = bivex::conditional_quantile_per_draw(tr, xs[2], 0.5, true);
        REQUIRE(per.size() > 100);
        std::sort(per.begin(), per.end());
        const double lo = bivex::quantile_sorted(per, 0.025);
        const double hi = bivex::quantile_sorted(per, 0.975);
        for (std::size_t j = 0; j < xs.size(); ++j) {
            INFO("x1 = " << xs[j] << ": quantile " << q[j] << ", band [" << lo << ", " << hi
                         << "]");
            CHECK(lo <= q[j]);
            CHECK(q[j] <= hi);
        }
    }
    {
        // strongly dependent truth: the curve increases across the grid
        const Trace tr = fit(0.8, 515151);
        const std::vector<double> xs = x1_grid(tr);
        const std::vector<double> q = curve(tr, xs);
        for (std::size_t j = 0; j + 1 < xs.size(); ++j) {
            INFO("x1 = " << xs[j] << " -> " << xs[j + 1] << ": " << q[j] << " -> " << q[j + 1]);
            CHECK(q[j + 1] > q[j]);
        }
    }

    CHECK(seconds_since(t0) < 300.0);
}
