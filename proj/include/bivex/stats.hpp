#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace bivex {

/// Linear-interpolation sample quantile (the common spreadsheet/R default),
/// taking an already sorted vector.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile_sorted: p outside [0,1]");
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = p * (static_cast<double>(n) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= n) return sorted[n - 1];
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean_of: empty sample");
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc / static_cast<double>(xs.size());
}

inline double sd_of(const std::vector<double>& xs) {
    if (xs.size() < 2) throw std::invalid_argument("sd_of: need at least two values");
    const double m = mean_of(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return std::sqrt(acc / (static_cast<double>(xs.size()) - 1.0));
}

/// Split-chain potential-scale-reduction diagnostic: each sequence is halved,
/// and the usual between/within variance ratio is computed over the halves.
/// Values near 1 indicate the sequences agree.
inline double split_rhat(const std::vector<std::vector<double>>& sequences) {
    std::vector<std::vector<double>> halves;
    for (const auto& seq : sequences) {
        const std::size_t half = seq.size() / 2;
        if (half < 2) continue;
        halves.emplace_back(seq.begin(), seq.begin() + half);
        halves.emplace_back(seq.end() - half, seq.end());
    }
    if (halves.size() < 2) throw std::invalid_argument("split_rhat: sequences too short");
    std::size_t len = halves[0].size();
    for (const auto& h : halves) len = std::min(len, h.size());
    const double n = static_cast<double>(len), k = static_cast<double>(halves.size());
    std::vector<double> means;
    double within = 0.0;
    for (auto& h : halves) {
        h.resize(len);
        means.push_back(mean_of(h));
        const double s = sd_of(h);
        within += s * s;
    }
    within /= k;
    const double grand = mean_of(means);
    double between = 0.0;
    for (double m : means) between += (m - grand) * (m - grand);
    between *= n / (k - 1.0);
    if (within <= 0.0) return 1.0;
    const double var_plus = (n - 1.0) / n * within + between / n;
    return std::sqrt(var_plus / within);
}

} // namespace bivex
