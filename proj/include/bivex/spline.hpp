#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace bivex {

/// Interior derivatives for shape-preserving cubic interpolation of
/// nondecreasing data: weighted harmonic mean of adjacent secant slopes,
/// zero wherever a neighbouring slope vanishes, zero at both endpoints.
/// The resulting Hermite cubic is nondecreasing on every interval.
inline std::vector<double> monotone_derivatives(const std::vector<double>& x,
                                                const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw std::invalid_argument("monotone_derivatives: need >= 2 matching knots/values");
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (!(x[i + 1] > x[i])) throw std::invalid_argument("monotone_derivatives: knots not strictly increasing");
        if (y[i + 1] < y[i]) throw std::invalid_argument("monotone_derivatives: values not nondecreasing");
    }
    std::vector<double> d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hl = x[i] - x[i - 1], hr = x[i + 1] - x[i];
        const double sl = (y[i] - y[i - 1]) / hl, sr = (y[i + 1] - y[i]) / hr;
        if (sl * sr > 0.0) {
            const double a = (1.0 + hr / (hl + hr)) / 3.0;
            d[i] = sl * sr / (a * sr + (1.0 - a) * sl);
        }
    }
    return d;
}

/// Monotone piecewise-cubic interpolant of nondecreasing values, with exact
/// closed-form antiderivatives of both the interpolant and its first moment.
/// Used as a smooth CDF component, so the derivative acts as a density.
class MonotoneSpline {
public:
    MonotoneSpline() = default;

    MonotoneSpline(std::vector<double> knots, std::vector<double> values)
        : x_(std::move(knots)), y_(std::move(values)) {
        d_ = monotone_derivatives(x_, y_);
        const std::size_t n = x_.size();
        pieces_.resize(n - 1);
        cum_val_.assign(n, 0.0);
        cum_wm_.assign(n, 0.0);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double h = x_[i + 1] - x_[i];
            const double s = (y_[i + 1] - y_[i]) / h;
            Piece& p = pieces_[i];
            p.c3 = (d_[i] + d_[i + 1] - 2.0 * s) / (h * h);
            p.c2 = (-2.0 * d_[i] - d_[i + 1] + 3.0 * s) / h;
            p.c1 = d_[i];
            p.c0 = y_[i];
            cum_val_[i + 1] = cum_val_[i] + piece_int_val(i, h);
            cum_wm_[i + 1] = cum_wm_[i] + piece_int_wm(i, h);
        }
    }

    /// Value at w; w is clamped to the knot range.
    double operator()(double w) const {
        if (w <= x_.front()) return y_.front();
        if (w >= x_.back()) return y_.back();
        const std::size_t i = piece_index(w);
        const double z = w - x_[i];
        const Piece& p = pieces_[i];
        return ((p.c3 * z + p.c2) * z + p.c1) * z + p.c0;
    }

    /// Derivative at w (zero outside the knot range).
    double derivative(double w) const {
        if (w < x_.front() || w > x_.back()) return 0.0;
        const std::size_t i = (w >= x_.back()) ? pieces_.size() - 1 : piece_index(w);
        const double z = w - x_[i];
        const Piece& p = pieces_[i];
        return (3.0 * p.c3 * z + 2.0 * p.c2) * z + p.c1;
    }

    /// Integral of the interpolant over the full knot range.
    double integral() const { return cum_val_.back(); }

    /// Integral of the interpolant over [a,b] (clamped to the knot range).
    double integral(double a, double b) const { return cum_at_val(b) - cum_at_val(a); }

    /// Integral of w * derivative(w) over [a,b] (clamped to the knot range).
    double moment_w(double a, double b) const { return cum_at_wm(b) - cum_at_wm(a); }

    /// Integral of (1 - w) * derivative(w) over [a,b].
    double moment_1mw(double a, double b) const {
        const double lo = std::clamp(a, x_.front(), x_.back());
        const double hi = std::clamp(b, x_.front(), x_.back());
        return ((*this)(hi) - (*this)(lo)) - moment_w(a, b);
    }

    const std::vector<double>& knots() const { return x_; }
    const std::vector<double>& values() const { return y_; }
    const std::vector<double>& derivatives() const { return d_; }

private:
    struct Piece {
        double c3 = 0, c2 = 0, c1 = 0, c0 = 0;
    };

    std::size_t piece_index(double w) const {
        const auto it = std::upper_bound(x_.begin(), x_.end(), w);
        const std::size_t i = static_cast<std::size_t>(it - x_.begin());
        return std::min(std::max<std::size_t>(i, 1) - 1, pieces_.size() - 1);
    }

    double piece_int_val(std::size_t i, double z) const {
        const Piece& p = pieces_[i];
        return (((p.c3 * 0.25 * z + p.c2 / 3.0) * z + 0.5 * p.c1) * z + p.c0) * z;
    }

    // integral of w * phi'(w) for w = x_i + z over [x_i, x_i + z]
    double piece_int_wm(std::size_t i, double z) const {
        const Piece& p = pieces_[i];
        const double xi = x_[i];
        const double a3 = 3.0 * p.c3;
        const double a2 = 2.0 * p.c2 + 3.0 * p.c3 * xi;
        const double a1 = p.c1 + 2.0 * p.c2 * xi;
        const double a0 = p.c1 * xi;
        return (((a3 * 0.25 * z + a2 / 3.0) * z + a1 * 0.5) * z + a0) * z;
    }

    double cum_at_val(double w) const {
        if (w <= x_.front()) return 0.0;
        if (w >= x_.back()) return cum_val_.back();
        const std::size_t i = piece_index(w);
        return cum_val_[i] + piece_int_val(i, w - x_[i]);
    }

    double cum_at_wm(double w) const {
        if (w <= x_.front()) return 0.0;
        if (w >= x_.back()) return cum_wm_.back();
        const std::size_t i = piece_index(w);
        return cum_wm_[i] + piece_int_wm(i, w - x_[i]);
    }

    std::vector<double> x_, y_, d_;
    std::vector<Piece> pieces_;
    std::vector<double> cum_val_, cum_wm_;
};

} // namespace bivex
