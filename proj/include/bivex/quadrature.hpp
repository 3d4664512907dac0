#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace bivex {

struct GaussLegendreRule {
    std::vector<double> nodes;   // on (-1,1)
    std::vector<double> weights; // sum to 2
};

/// Nodes/weights of the n-point Gauss-Legendre rule, computed by Newton
/// iteration on the Legendre recurrence and cached per n.
inline const GaussLegendreRule& gauss_legendre(int n) {
    if (n < 1 || n > 4096) throw std::invalid_argument("gauss_legendre: bad order");
    static std::map<int, GaussLegendreRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    GaussLegendreRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Tricomi initial guess for the i-th root (descending)
        double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    auto [pos, ok] = cache.emplace(n, std::move(rule));
    (void)ok;
    return pos->second;
}

/// n-point Gauss-Legendre approximation of the integral of f over [a,b].
template <class F>
double integrate_gl(F&& f, double a, double b, int n) {
    if (!(b > a)) return 0.0;
    const GaussLegendreRule& rule = gauss_legendre(n);
    const double mid = 0.5 * (a + b), hw = 0.5 * (b - a);
    double acc = 0.0, comp = 0.0; // Kahan
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double term = rule.weights[i] * f(mid + hw * rule.nodes[i]) - comp;
        const double tmp = acc + term;
        comp = (tmp - acc) - term;
        acc = tmp;
    }
    return hw * acc;
}

namespace detail {
template <class F>
double simpson_rec(F& f, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
} // namespace detail

/// Adaptive Simpson integration of f over [a,b] to absolute tolerance tol.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol = 1e-12, int max_depth = 48) {
    if (!(b > a)) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// Locate by bisection the leftmost point x in [lo,hi] with f(x) >= target,
/// assuming f is nondecreasing; used for generalized inverses of CDFs.
template <class F>
double bisect_nondecreasing(F&& f, double lo, double hi, double target, double tol = 1e-13) {
    if (f(lo) >= target) return lo;
    if (f(hi) < target) return hi;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) >= target)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

} // namespace bivex
