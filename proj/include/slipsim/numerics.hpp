// Small numerical toolbox: quadrature, finite differences, root finding,
// and periodic lookup tables.

#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <numbers>
#include <vector>

namespace slipsim {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// composite Simpson on [a,b] with n (even) subintervals
template <class F>
double simpson(F f, double a, double b, int n) {
    if (n % 2 != 0) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return s * h / 3.0;
}

namespace detail {
template <class F>
double adapt_step(F& f, double a, double b, double fa, double fm, double fb, double whole,
                  double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adapt_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adapt_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
} // namespace detail

// adaptive Simpson to absolute tolerance tol
template <class F>
double integrate(F f, double a, double b, double tol = 1e-10, int max_depth = 50) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::adapt_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// fourth-order central difference
template <class F>
double derivative(F f, double x, double h = 1e-4) {
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

// second-order central difference (the documented default for field derivatives)
template <class F>
double central_diff(F f, double x, double h = 1e-5) {
    return (f(x + h) - f(x - h)) / (2 * h);
}

// bisection; requires a sign change on [a,b]
template <class F>
double bisect(F f, double a, double b, double xtol = 1e-12, int max_iter = 200) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0) throw std::invalid_argument("bisect: no sign change on interval");
    for (int i = 0; i < max_iter && (b - a) > xtol; ++i) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0.0) return m;
        if (fa * fm < 0.0) {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
    }
    return 0.5 * (a + b);
}

// Uniform lookup table for a period-1 function of phi, linear interpolation.
class PeriodicTable {
  public:
    PeriodicTable() = default;
    explicit PeriodicTable(std::vector<double> values) : v_(std::move(values)) {
        assert(!v_.empty());
    }

    template <class F>
    static PeriodicTable tabulate(F f, std::size_t n) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = f(static_cast<double>(i) / n);
        return PeriodicTable(std::move(v));
    }

    double operator()(double phi) const {
        const std::size_t n = v_.size();
        double x = phi - std::floor(phi);
        x *= static_cast<double>(n);
        std::size_t i = static_cast<std::size_t>(x);
        if (i >= n) i = n - 1;
        const double w = x - static_cast<double>(i);
        const std::size_t j = (i + 1 == n) ? 0 : i + 1;
        return v_[i] * (1.0 - w) + v_[j] * w;
    }

    std::size_t size() const { return v_.size(); }
    const std::vector<double>& values() const { return v_; }

    double min_value() const {
        double m = v_[0];
        for (double x : v_) m = std::min(m, x);
        return m;
    }
    double max_value() const {
        double m = v_[0];
        for (double x : v_) m = std::max(m, x);
        return m;
    }

  private:
    std::vector<double> v_;
};

// mean of a sample
inline double mean(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

inline double fractional_part(double x) { return x - std::floor(x); }

// wrap into [0, L)
inline double wrap(double x, double L) {
    double y = std::fmod(x, L);
    if (y < 0.0) y += L;
    return y;
}

} // namespace slipsim
