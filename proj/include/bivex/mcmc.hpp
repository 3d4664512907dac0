#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "bivex/prior.hpp"
#include "bivex/rng.hpp"
#include "bivex/spectral.hpp"
#include "bivex/stats.hpp"
#include "bivex/tail.hpp"

namespace bivex {

struct ChainState {
    SpectralParams theta;
    MarginParams g1, g2;
    double log_lik = 0.0;   // cached censored log likelihood
    double log_prior = 0.0; // cached joint log prior
};

struct McmcConfig {
    std::uint64_t iterations = 200000; // total sweeps, burn-in included
    std::uint64_t burn_in = 50000;
    std::uint64_t thin = 10;
    std::uint64_t seed = 1;
    double lambda = 3.0;       // mean of the zero-truncated atom-count prior
    int quadrature_nodes = 64; // nodes for the parameter-space normalizers
    double margin_scale = 0.01;
    bool prior_only = false; // drop the likelihood and freeze the margins
    int max_atoms = 400;     // births are disabled at this atom count

    std::string fingerprint() const {
        std::ostringstream os;
        os << std::setprecision(17) << "mcmc-v1"
           << ";iterations=" << iterations << ";burn_in=" << burn_in << ";thin=" << thin
           << ";seed=" << seed << ";lambda=" << lambda << ";nodes=" << quadrature_nodes
           << ";margin_scale=" << margin_scale << ";prior_only=" << (prior_only ? 1 : 0)
           << ";max_atoms=" << max_atoms;
        return os.str();
    }
};

struct TraceRecord {
    std::uint64_t iter = 0;
    SpectralParams theta;
    MarginParams g1, g2;
    double log_lik = 0.0;
};

struct MoveStats {
    std::uint64_t attempted = 0;
    std::uint64_t accepted = 0;
    double rate() const {
        return attempted == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(attempted);
    }
};

struct Trace {
    std::vector<TraceRecord> records;
    MoveStats within, birth, death, margins;
    std::map<int, std::uint64_t> occupancy; // atom count over recorded states
    std::uint64_t seed = 0;
    std::string config_fingerprint;
};

namespace detail {
constexpr double kProposalGuard = 1e-12;
}

/// A proposal is kept only if every coordinate stays strictly inside its
/// range and the atoms stay separated; boundary grazes are rejected.
inline bool admissible_proposal(const SpectralParams& p) {
    const double g = detail::kProposalGuard;
    if (p.ys.empty()) return false;
    if (!(p.h0 > g && p.h0 < 0.5 - g)) return false;
    if (!(p.h1 > g && p.h1 < 0.5 - g)) return false;
    double prev = 0.0;
    for (double y : p.ys) {
        if (!(y - prev > g)) return false;
        prev = y;
    }
    if (!(1.0 - prev > g)) return false;
    return std::abs(p.atom_mean() - p.target_mean()) <= 1e-9;
}

/// Fixed-dimension move on the spectral parameters.  A pair of coordinate
/// slots is perturbed along the one-dimensional orbit that keeps the mean
/// constraint and every other coordinate fixed.  Slot 0 is the mass at 0,
/// slot m+1 the mass at 1, slots 1..m the interior atoms in order.
///
/// The admissible range for the shift u applied to the lower slot:
inline std::pair<double, double> within_interval(const SpectralParams& p, int i, int j) {
    const int m = p.m();
    if (m < 1) throw std::invalid_argument("within_interval: no interior atoms");
    if (!(0 <= i && i < j && j <= m + 1))
        throw std::invalid_argument("within_interval: bad slot pair");
    const double mm = static_cast<double>(m);
    const double ybar = p.target_mean();

    if (i == 0 && j == m + 1) {
        // Both boundary masses; atoms fixed, so their mean is pinned.
        const double lo = std::max(0.0, 1.0 - 0.5 / ybar);
        return {lo - p.h0, 0.5 - p.h0};
    }
    if (i == 0) {
        // Mass at 0 with one atom; the atom tracks the changing mean.
        const int a = j - 1;
        const double y = p.ys[a];
        const double lo_y = a == 0 ? 0.0 : p.ys[a - 1];
        const double hi_y = a == m - 1 ? 1.0 : p.ys[a + 1];
        const auto h0_for = [&](double c) {
            const double yc = ybar + (c - y) / mm; // mean once the atom reaches c
            return 1.0 - p.h1 - (0.5 - p.h1) / yc;
        };
        const double mean_at_lo = ybar + (lo_y - y) / mm;
        const double lo = mean_at_lo > 0.0 ? std::max(0.0, h0_for(lo_y)) : 0.0;
        const double hi = std::min(0.5, h0_for(hi_y));
        return {lo - p.h0, hi - p.h0};
    }
    if (j == m + 1) {
        // One atom with the mass at 1; the mean follows the atom.
        const int a = i - 1;
        const double y = p.ys[a];
        const double lo_y = a == 0 ? 0.0 : p.ys[a - 1];
        const double hi_y = a == m - 1 ? 1.0 : p.ys[a + 1];
        const double hi_mean = mm * (0.5 / (1.0 - p.h0) - ybar); // keeps the mass at 1 positive
        return {lo_y - y, std::min(hi_y - y, hi_mean)};
    }
    // Two interior atoms sheared in opposite directions; mean untouched.
    const int a = i - 1, b = j - 1;
    const double lo_a = a == 0 ? 0.0 : p.ys[a - 1];
    const double hi_b = b == m - 1 ? 1.0 : p.ys[b + 1];
    const double lo = std::max(lo_a - p.ys[a], p.ys[b] - hi_b);
    const double hi = b == a + 1 ? 0.5 * (p.ys[b] - p.ys[a])
                                 : std::min(p.ys[a + 1] - p.ys[a], p.ys[b] - p.ys[b - 1]);
    return {lo, hi};
}

struct WithinMove {
    bool valid = false;
    SpectralParams theta;
    double log_factor = 0.0; // log volume-change of the move map
    double fwd_len = 0.0;    // admissible range at the current point
    double back_len = 0.0;   // admissible range of the reverse shift
};

inline WithinMove within_move(const SpectralParams& p, int i, int j, double u) {
    WithinMove out;
    const auto range = within_interval(p, i, j);
    if (!(range.first < range.second)) return out;
    if (!(u > range.first && u < range.second)) return out;
    const int m = p.m();
    const double mm = static_cast<double>(m);
    const double ybar = p.target_mean();

    SpectralParams q = p;
    double log_factor = 0.0;
    if (i == 0 && j == m + 1) {
        q.h0 = p.h0 + u;
        q.h1 = (0.5 - (1.0 - q.h0) * ybar) / (1.0 - ybar);
        log_factor = std::log(0.5 - q.h0) - std::log(0.5 - p.h0);
    } else if (i == 0) {
        q.h0 = p.h0 + u;
        const double nb = (0.5 - p.h1) / (1.0 - q.h0 - p.h1);
        q.ys[j - 1] = p.ys[j - 1] + mm * (nb - ybar);
    } else if (j == m + 1) {
        const double nb = ybar + u / mm;
        q.ys[i - 1] = p.ys[i - 1] + u;
        q.h1 = (0.5 - (1.0 - p.h0) * nb) / (1.0 - nb);
        log_factor = 2.0 * (std::log(q.interior_mass()) - std::log(p.interior_mass()));
    } else {
        q.ys[i - 1] += u;
        q.ys[j - 1] -= u;
    }
    if (!admissible_proposal(q)) return out;

    const auto back = within_interval(q, i, j);
    if (!(-u > back.first && -u < back.second)) return out;
    out.valid = true;
    out.theta = std::move(q);
    out.log_factor = log_factor;
    out.fwd_len = range.second - range.first;
    out.back_len = back.second - back.first;
    return out;
}

/// Shift range for a birth paired with atom k: the new atom lands at
/// mean + u and atom k gives up the same amount, so the mean is preserved.
/// Atoms at or below the mean pair with a new atom above it and vice versa.
inline std::pair<double, double> birth_interval(const SpectralParams& p, int k) {
    const double ybar = p.target_mean();
    const double y = p.ys.at(static_cast<std::size_t>(k));
    if (y <= ybar) return {0.0, std::min(1.0 - ybar, y)};
    return {std::max(-ybar, y - 1.0), 0.0};
}

struct BirthMove {
    bool valid = false;
    SpectralParams theta;
    double interval_len = 0.0;
    int n_low = 0;  // atoms at or below the mean, counted on the result
    int n_high = 0; // atoms above the mean, counted on the result
};

inline BirthMove birth_move(const SpectralParams& p, int k, double u) {
    BirthMove out;
    const auto range = birth_interval(p, k);
    if (!(range.first < range.second)) return out;
    if (!(u > range.first && u < range.second)) return out;
    const double ybar = p.target_mean();

    std::vector<double> ys = p.ys;
    ys[static_cast<std::size_t>(k)] -= u;
    ys.push_back(ybar + u);
    std::sort(ys.begin(), ys.end());
    SpectralParams q{p.h0, std::move(ys), p.h1};
    if (!admissible_proposal(q)) return out;

    out.n_low = static_cast<int>(std::upper_bound(q.ys.begin(), q.ys.end(), ybar) - q.ys.begin());
    out.n_high = q.m() - out.n_low;
    if (out.n_low == 0 || out.n_high == 0) return out;
    out.valid = true;
    out.theta = std::move(q);
    out.interval_len = range.second - range.first;
    return out;
}

struct DeathMove {
    bool valid = false;
    SpectralParams theta;
    double shift = 0.0;       // distance the surviving partner moves
    double reverse_len = 0.0; // birth shift range that recreates the pair
    int n_low = 0;            // group sizes before the removal
    int n_high = 0;
};

/// Remove whichever of atoms j (at or below the mean) and k (above it) sits
/// closer to the mean, shifting the partner toward the mean by the same
/// distance; the exact inverse of a birth.
inline DeathMove death_move(const SpectralParams& p, int j, int k) {
    DeathMove out;
    const int m = p.m();
    if (m < 2) return out;
    const double ybar = p.target_mean();
    const double yj = p.ys.at(static_cast<std::size_t>(j));
    const double yk = p.ys.at(static_cast<std::size_t>(k));
    if (!(yj <= ybar && yk > ybar))
        throw std::invalid_argument("death_move: pair must straddle the mean");
    const double dj = ybar - yj, dk = yk - ybar;
    const double u = std::min(dj, dk);
    if (!(u > detail::kProposalGuard)) return out;

    const bool remove_low = dj <= dk;
    const double partner = remove_low ? yk - u : yj + u;
    std::vector<double> ys;
    ys.reserve(static_cast<std::size_t>(m) - 1);
    for (int idx = 0; idx < m; ++idx)
        if (idx != j && idx != k) ys.push_back(p.ys[static_cast<std::size_t>(idx)]);
    ys.push_back(partner);
    std::sort(ys.begin(), ys.end());
    SpectralParams q{p.h0, std::move(ys), p.h1};
    if (!admissible_proposal(q)) return out;

    const auto pit = std::lower_bound(q.ys.begin(), q.ys.end(), partner);
    const int pi = static_cast<int>(pit - q.ys.begin());
    const auto range = birth_interval(q, pi);
    // Birth shift that recreates the pair: a partner ending at or below the
    // mean pairs upward with the high atom, otherwise downward with the low
    // one.  (A partner exactly at the mean arises from a symmetric pair.)
    const double ub = partner <= ybar ? yk - ybar : yj - ybar;
    if (!(range.first < range.second) || !(ub > range.first && ub < range.second)) return out;

    out.n_low = static_cast<int>(std::upper_bound(p.ys.begin(), p.ys.end(), ybar) - p.ys.begin());
    out.n_high = m - out.n_low;
    out.valid = true;
    out.theta = std::move(q);
    out.shift = u;
    out.reverse_len = range.second - range.first;
    return out;
}

struct MoveProposal {
    bool valid = false; // false: automatic rejection (empty range or guard)
    ChainState state;
    double log_ratio = -std::numeric_limits<double>::infinity();
};

struct BayesEstimate {
    std::vector<double> grid;
    std::vector<double> mean, lower, upper; // pointwise posterior of H(w)
    MarginParams g1, g2;                    // posterior means of the margins
};

class Sampler {
public:
    Sampler(CensoredSample data, McmcConfig cfg, std::shared_ptr<ThetaNormalizers> norm = nullptr)
        : data_(std::move(data)), cfg_(cfg), norm_(std::move(norm)) {
        if (cfg_.thin == 0) throw std::invalid_argument("Sampler: thin must be positive");
        if (!(cfg_.lambda > 0.0)) throw std::invalid_argument("Sampler: lambda must be positive");
        if (!(cfg_.margin_scale > 0.0)) throw std::invalid_argument("Sampler: margin scale must be positive");
        if (cfg_.max_atoms < 1 || cfg_.max_atoms > 400)
            throw std::invalid_argument("Sampler: max_atoms outside the supported table");
        if (!norm_) norm_ = std::make_shared<ThetaNormalizers>(cfg_.quadrature_nodes);
    }

    const McmcConfig& config() const { return cfg_; }
    const CensoredSample& data() const { return data_; }
    std::shared_ptr<ThetaNormalizers> normalizers() const { return norm_; }

    double log_likelihood_of(const SpectralParams& theta, const MarginParams& g1,
                             const MarginParams& g2) const {
        if (cfg_.prior_only) return 0.0;
        return log_likelihood(data_, SpectralMeasure(theta), g1, g2);
    }

    double log_prior_of(const SpectralParams& theta, const MarginParams& g1,
                        const MarginParams& g2) const {
        return joint_log_prior(theta, g1, g2, cfg_.lambda, *norm_);
    }

    ChainState make_state(SpectralParams theta, MarginParams g1, MarginParams g2) const {
        theta.validate();
        ChainState s{std::move(theta), g1, g2, 0.0, 0.0};
        s.log_lik = log_likelihood_of(s.theta, s.g1, s.g2);
        s.log_prior = log_prior_of(s.theta, s.g1, s.g2);
        return s;
    }

    /// Default start: three equally spaced atoms with light boundary masses,
    /// a mildly heavy tail, and moment-matched margin scales.
    ChainState initial_state() const {
        SpectralParams theta;
        theta.h0 = 0.1;
        theta.h1 = 0.1;
        const int m0 = 3;
        const double shift = theta.target_mean() - 0.5;
        for (int i = 1; i <= m0; ++i)
            theta.ys.push_back(static_cast<double>(i) / (m0 + 1) + shift);
        const double n = static_cast<double>(data_.size());
        MarginParams g1{0.1, 0.5, 1.0, data_.u1};
        MarginParams g2{0.1, 0.5, 1.0, data_.u2};
        if (n > 0.0) {
            g1.zeta = static_cast<double>(data_.n_exceed1()) / n;
            g2.zeta = static_cast<double>(data_.n_exceed2()) / n;
        }
        const auto scale_from = [](std::vector<double> excess) {
            return excess.size() >= 2 ? sd_of(excess) : 1.0;
        };
        std::vector<double> e1, e2;
        for (double x : data_.x1_only) e1.push_back(x - data_.u1);
        for (double x : data_.x2_only) e2.push_back(x - data_.u2);
        for (const auto& [a, b] : data_.both) {
            e1.push_back(a - data_.u1);
            e2.push_back(b - data_.u2);
        }
        g1.sigma = scale_from(std::move(e1));
        g2.sigma = scale_from(std::move(e2));
        return make_state(std::move(theta), g1, g2);
    }

    double birth_prob(int m) const {
        if (m >= cfg_.max_atoms) return 0.0;
        return m == 1 ? 0.5 : 1.0 / 3.0;
    }

    double death_prob(int m) const {
        if (m <= 1) return 0.0;
        return m >= cfg_.max_atoms ? 0.5 : 1.0 / 3.0;
    }

    MoveProposal move_within(const ChainState& s, Rng& rng) const {
        MoveProposal out;
        const int m = s.theta.m();
        const std::size_t slots = static_cast<std::size_t>(m) + 2;
        std::size_t t = rng.uniform_index(slots * (slots - 1) / 2);
        int i = 0;
        for (;; ++i) {
            const std::size_t row = slots - 1 - static_cast<std::size_t>(i);
            if (t < row) break;
            t -= row;
        }
        const int j = i + 1 + static_cast<int>(t);
        const auto range = within_interval(s.theta, i, j);
        if (!(range.first < range.second)) return out;
        const double u = rng.uniform(range.first, range.second);
        WithinMove wm = within_move(s.theta, i, j, u);
        if (!wm.valid) return out;
        return finish_spectral(s, std::move(wm.theta),
                               wm.log_factor + std::log(wm.fwd_len) - std::log(wm.back_len));
    }

    MoveProposal move_birth(const ChainState& s, Rng& rng) const {
        MoveProposal out;
        const int m = s.theta.m();
        const double pb = birth_prob(m);
        if (pb <= 0.0) return out;
        const int k = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(m)));
        const auto range = birth_interval(s.theta, k);
        if (!(range.first < range.second)) return out;
        const double u = rng.uniform(range.first, range.second);
        BirthMove bm = birth_move(s.theta, k, u);
        if (!bm.valid) return out;
        const double extra = std::log(death_prob(m + 1)) - std::log(pb) +
                             std::log(static_cast<double>(m)) + std::log(bm.interval_len) -
                             std::log(static_cast<double>(bm.n_low) * bm.n_high) +
                             0.5 * (std::log(m + 1.0) - std::log(static_cast<double>(m)));
        return finish_spectral(s, std::move(bm.theta), extra);
    }

    MoveProposal move_death(const ChainState& s, Rng& rng) const {
        MoveProposal out;
        const int m = s.theta.m();
        const double pd = death_prob(m);
        if (pd <= 0.0) return out;
        const double ybar = s.theta.target_mean();
        const auto split = std::upper_bound(s.theta.ys.begin(), s.theta.ys.end(), ybar);
        const std::size_t n_low = static_cast<std::size_t>(split - s.theta.ys.begin());
        const std::size_t n_high = static_cast<std::size_t>(m) - n_low;
        if (n_low == 0 || n_high == 0) return out;
        const int j = static_cast<int>(rng.uniform_index(n_low));
        const int k = static_cast<int>(n_low + rng.uniform_index(n_high));
        DeathMove dm = death_move(s.theta, j, k);
        if (!dm.valid) return out;
        const double extra = std::log(birth_prob(m - 1)) - std::log(pd) -
                             std::log(static_cast<double>(m - 1)) - std::log(dm.reverse_len) +
                             std::log(static_cast<double>(dm.n_low) * dm.n_high) +
                             0.5 * (std::log(m - 1.0) - std::log(static_cast<double>(m)));
        return finish_spectral(s, std::move(dm.theta), extra);
    }

    MoveProposal move_margins(const ChainState& s, Rng& rng) const {
        MoveProposal out;
        const std::size_t which = rng.uniform_index(2);
        const double z1 = rng.normal(), z2 = rng.normal(), z3 = rng.normal();
        MarginParams g1 = s.g1, g2 = s.g2;
        MarginParams& g = which == 0 ? g1 : g2;
        g.xi += cfg_.margin_scale * z1;
        g.zeta *= std::exp(cfg_.margin_scale * z2);
        g.sigma *= std::exp(cfg_.margin_scale * z3);
        out.valid = true;
        out.state.theta = s.theta;
        out.state.g1 = g1;
        out.state.g2 = g2;
        out.state.log_prior = log_prior_of(s.theta, g1, g2);
        if (out.state.log_prior == -std::numeric_limits<double>::infinity()) {
            out.state.log_lik = -std::numeric_limits<double>::infinity();
            return out; // outside the prior support; never accepted
        }
        out.state.log_lik = log_likelihood_of(s.theta, g1, g2);
        out.log_ratio = (out.state.log_lik - s.log_lik) + (out.state.log_prior - s.log_prior) +
                        cfg_.margin_scale * (z2 + z3); // log-scale proposal asymmetry
        return out;
    }

    Trace run() const { return run(std::nullopt); }

    Trace run(std::optional<ChainState> start) const {
        ChainState s = start ? std::move(*start) : initial_state();
        s.theta.validate();
        if (s.theta.degenerate())
            throw std::invalid_argument("run_chain: the chain needs at least one interior atom");
        s.log_lik = log_likelihood_of(s.theta, s.g1, s.g2);
        s.log_prior = log_prior_of(s.theta, s.g1, s.g2);
        if (!std::isfinite(s.log_lik) || !std::isfinite(s.log_prior))
            throw std::runtime_error(
                "run_chain: starting state has non-finite posterior density; "
                "check the thresholds and the starting values");

        Trace tr;
        tr.seed = cfg_.seed;
        tr.config_fingerprint = cfg_.fingerprint();
        Rng rng(cfg_.seed);
        for (std::uint64_t it = 1; it <= cfg_.iterations; ++it) {
            MoveProposal prop;
            MoveStats* stats;
            const bool spectral = cfg_.prior_only || rng.uniform() < 0.5;
            if (!spectral) {
                prop = move_margins(s, rng);
                stats = &tr.margins;
            } else {
                const int m = s.theta.m();
                const double pb = birth_prob(m), pd = death_prob(m);
                const double v = rng.uniform();
                if (v < pb) {
                    prop = move_birth(s, rng);
                    stats = &tr.birth;
                } else if (v < pb + pd) {
                    prop = move_death(s, rng);
                    stats = &tr.death;
                } else {
                    prop = move_within(s, rng);
                    stats = &tr.within;
                }
            }
            ++stats->attempted;
            if (prop.valid && rng.uniform() < std::exp(std::min(0.0, prop.log_ratio))) {
                s = std::move(prop.state);
                ++stats->accepted;
            }
#ifndef NDEBUG
            if (it % 8192 == 0) check_caches(s);
#endif
            if (it > cfg_.burn_in && (it - cfg_.burn_in) % cfg_.thin == 0) {
                tr.records.push_back({it, s.theta, s.g1, s.g2, s.log_lik});
                ++tr.occupancy[s.theta.m()];
            }
        }
        return tr;
    }

private:
    MoveProposal finish_spectral(const ChainState& s, SpectralParams theta, double extra) const {
        MoveProposal out;
        out.valid = true;
        out.state.theta = std::move(theta);
        out.state.g1 = s.g1;
        out.state.g2 = s.g2;
        out.state.log_lik = log_likelihood_of(out.state.theta, s.g1, s.g2);
        out.state.log_prior = log_prior_of(out.state.theta, s.g1, s.g2);
        if (out.state.log_lik == -std::numeric_limits<double>::infinity()) return out;
        out.log_ratio = (out.state.log_lik - s.log_lik) + (out.state.log_prior - s.log_prior) + extra;
        return out;
    }

    void check_caches(const ChainState& s) const {
        const double ll = log_likelihood_of(s.theta, s.g1, s.g2);
        const double lp = log_prior_of(s.theta, s.g1, s.g2);
        if (std::abs(ll - s.log_lik) > 1e-9 || std::abs(lp - s.log_prior) > 1e-9)
            throw std::logic_error("Sampler: cached state density drifted from a fresh evaluation");
    }

    CensoredSample data_;
    McmcConfig cfg_;
    std::shared_ptr<ThetaNormalizers> norm_;
};

inline Trace run_chain(const CensoredSample& data, const McmcConfig& cfg,
                       std::shared_ptr<ThetaNormalizers> norm = nullptr) {
    return Sampler(data, cfg, std::move(norm)).run();
}

/// Independent chains with consecutive seeds, sharing the normalizer table.
inline std::vector<Trace> run_chains(const CensoredSample& data, const McmcConfig& cfg,
                                     std::size_t n_chains,
                                     std::shared_ptr<ThetaNormalizers> norm = nullptr) {
    if (n_chains == 0) throw std::invalid_argument("run_chains: need at least one chain");
    if (!norm) norm = std::make_shared<ThetaNormalizers>(cfg.quadrature_nodes);
    std::vector<Trace> traces(n_chains);
    std::vector<std::thread> workers;
    workers.reserve(n_chains);
    for (std::size_t c = 0; c < n_chains; ++c) {
        McmcConfig chain_cfg = cfg;
        chain_cfg.seed = cfg.seed + c;
        workers.emplace_back([&, c, chain_cfg] { traces[c] = run_chain(data, chain_cfg, norm); });
    }
    for (auto& w : workers) w.join();
    return traces;
}

/// Pointwise posterior mean and central 95% band of H(w) over a grid,
/// plus posterior means of the margin parameters.
inline BayesEstimate bayes_estimate(const Trace& trace, const std::vector<double>& grid) {
    if (trace.records.empty()) throw std::invalid_argument("bayes_estimate: empty trace");
    const std::size_t n = trace.records.size(), gn = grid.size();
    BayesEstimate est;
    est.grid = grid;
    est.mean.resize(gn);
    est.lower.resize(gn);
    est.upper.resize(gn);

    std::vector<std::vector<double>> cols(gn, std::vector<double>(n));
    MarginParams g1{0.0, 0.0, 0.0, trace.records.front().g1.u};
    MarginParams g2{0.0, 0.0, 0.0, trace.records.front().g2.u};
    for (std::size_t r = 0; r < n; ++r) {
        const auto& rec = trace.records[r];
        const SpectralMeasure sm(rec.theta);
        for (std::size_t g = 0; g < gn; ++g) cols[g][r] = sm.cdf(grid[g]);
        g1.xi += rec.g1.xi;
        g1.zeta += rec.g1.zeta;
        g1.sigma += rec.g1.sigma;
        g2.xi += rec.g2.xi;
        g2.zeta += rec.g2.zeta;
        g2.sigma += rec.g2.sigma;
    }
    const double dn = static_cast<double>(n);
    g1.xi /= dn;
    g1.zeta /= dn;
    g1.sigma /= dn;
    g2.xi /= dn;
    g2.zeta /= dn;
    g2.sigma /= dn;
    est.g1 = g1;
    est.g2 = g2;
    for (std::size_t g = 0; g < gn; ++g) {
        est.mean[g] = mean_of(cols[g]);
        std::sort(cols[g].begin(), cols[g].end());
        est.lower[g] = quantile_sorted(cols[g], 0.025);
        est.upper[g] = quantile_sorted(cols[g], 0.975);
    }
    return est;
}

} // namespace bivex
