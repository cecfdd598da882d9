// Special functions used by the closed-form laws: complex gamma (Lanczos),
// normal tails, and the Kolmogorov / Kuiper asymptotic tail series.

#pragma once

#include <cmath>
#include <complex>
#include <numbers>

namespace slipsim {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
inline double normal_tail_prob(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// log Gamma(z) for Re(z) > 0 by the Lanczos approximation (g = 7, 9 terms);
// relative accuracy ~1e-13 on the half-plane we use.
inline std::complex<double> log_gamma(std::complex<double> z) {
    static const double coef[9] = {
        0.99999999999980993,      676.5203681218851,     -1259.1392167224028,
        771.32342877765313,      -176.61502916214059,    12.507343278686905,
        -0.13857109526572012,     9.9843695780195716e-6, 1.5056327351493116e-7};
    const double g = 7.0;
    z -= 1.0;
    std::complex<double> x = coef[0];
    for (int i = 1; i < 9; ++i) x += coef[i] / (z + static_cast<double>(i));
    const std::complex<double> t = z + g + 0.5;
    return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(x);
}

inline std::complex<double> cgamma(std::complex<double> z) { return std::exp(log_gamma(z)); }

// P(sup_n |F_n - F| exceeds observed) for the one-sample KS statistic,
// first-order asymptotic series with Stephens' small-sample correction.
inline double ks_tail_series(double lambda, int terms = 20) {
    if (lambda < 1e-8) return 1.0;
    double s = 0.0;
    for (int j = 1; j <= terms; ++j) {
        const double e = std::exp(-2.0 * j * j * lambda * lambda);
        s += (j % 2 == 1 ? e : -e);
    }
    double p = 2.0 * s;
    if (p < 0.0) p = 0.0;
    if (p > 1.0) p = 1.0;
    return p;
}

inline double ks_p_value(double d, double n_eff) {
    const double sn = std::sqrt(n_eff);
    return ks_tail_series(d * (sn + 0.12 + 0.11 / sn));
}

inline double kuiper_tail_series(double lambda, int terms = 20) {
    if (lambda < 1e-8) return 1.0;
    double s = 0.0;
    for (int j = 1; j <= terms; ++j) {
        const double a = 4.0 * j * j * lambda * lambda;
        s += (a - 1.0) * std::exp(-0.5 * a);
    }
    double p = 2.0 * s;
    if (p < 0.0) p = 0.0;
    if (p > 1.0) p = 1.0;
    return p;
}

inline double kuiper_p_value(double v, double n_eff) {
    const double sn = std::sqrt(n_eff);
    return kuiper_tail_series(v * (sn + 0.155 + 0.24 / sn));
}

namespace detail {
template <class F>
double invert_tail(F tail, double alpha) {
    double lo = 0.05, hi = 5.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (tail(mid) > alpha)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}
} // namespace detail

// critical statistic values at level alpha for sample size n_eff
inline double ks_critical(double alpha, double n_eff) {
    const double lam = detail::invert_tail([](double l) { return ks_tail_series(l); }, alpha);
    const double sn = std::sqrt(n_eff);
    return lam / (sn + 0.12 + 0.11 / sn);
}

inline double kuiper_critical(double alpha, double n_eff) {
    const double lam = detail::invert_tail([](double l) { return kuiper_tail_series(l); }, alpha);
    const double sn = std::sqrt(n_eff);
    return lam / (sn + 0.155 + 0.24 / sn);
}

} // namespace slipsim
