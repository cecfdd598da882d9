// Closed-form limit laws: the Gumbel family, the density A of (Z - log 2)/2,
// the periodic cycling profile Q (sum and Fourier forms), the law of
// Theta = -log|N|, the logistic law, and asymptotically geometric variables.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "slipsim/numerics.hpp"
#include "slipsim/rng.hpp"
#include "slipsim/special.hpp"

namespace slipsim {

// ---------------------------------------------------------------------------
// Standard Gumbel law  P(Z <= t) = exp(-exp(-t)).
inline double gumbel_cdf(double t) { return std::exp(-std::exp(-t)); }
inline double gumbel_pdf(double t) { return std::exp(-t - std::exp(-t)); }
inline double gumbel_sample(Rng& rng) { return -std::log(-std::log(rng.uniform())); }

// Density of (Z - log 2)/2:  A(x) = exp(-2x - e^{-2x}/2), antiderivative
// exp(-e^{-2x}/2).
inline double a_density(double x) {
    const double e = std::exp(-2.0 * x);
    return std::exp(-2.0 * x - 0.5 * e);
}
inline double a_cdf(double x) { return std::exp(-0.5 * std::exp(-2.0 * x)); }

// Theta = -log|N|, N standard normal: cdf P(Theta <= t) = erfc(e^{-t}/sqrt 2).
inline double theta_law_cdf(double t) {
    return std::erfc(std::exp(-t) / std::numbers::sqrt2);
}
inline double theta_law_density(double t) {
    const double e = std::exp(-t);
    return std::sqrt(2.0 / std::numbers::pi) * std::exp(-t - 0.5 * e * e);
}
inline double theta_law_sample(Rng& rng) {
    double n;
    do {
        n = rng.normal();
    } while (n == 0.0);
    return -std::log(std::abs(n));
}

// ---------------------------------------------------------------------------
// Cycling profile  Q_L(x) = sum_n A(L(n - x)), period 1 in x, L = lambda_+ T_+.

namespace detail {

inline int cycling_auto_window(double lambdaT) {
    // right tail of the sum decays like e^{-2 L n}, left tail doubly
    // exponentially; both below 1e-14 at these widths
    const int w_right = static_cast<int>(std::ceil(17.0 / lambdaT));
    const int w_left = static_cast<int>(std::ceil(2.5 / lambdaT)) + 2;
    return std::max({w_right, w_left, 2});
}

} // namespace detail

inline double cycling_profile_sum(double x, double lambdaT, int n_window = 0) {
    if (!(lambdaT > 0.0)) throw std::domain_error("cycling profile: lambdaT must be > 0");
    if (n_window <= 0) n_window = detail::cycling_auto_window(lambdaT);
    double s = 0.0;
    for (int n = -n_window; n <= n_window; ++n) s += a_density(lambdaT * (n - x));
    return s;
}

// complex-argument version of the sum (Q is elliptic: also periodic with
// period pi i / lambdaT in the imaginary direction)
inline std::complex<double> cycling_profile_sum(std::complex<double> z, double lambdaT,
                                                int n_window = 0) {
    if (n_window <= 0) n_window = detail::cycling_auto_window(lambdaT);
    std::complex<double> s = 0.0;
    for (int n = -n_window; n <= n_window; ++n) {
        const std::complex<double> arg = lambdaT * (static_cast<double>(n) - z);
        s += std::exp(-2.0 * arg - 0.5 * std::exp(-2.0 * arg));
    }
    return s;
}

// Fourier form: Q_L(x) = sum_k a_k e^{2 pi i k x},
//   a_k = 2^{-pi i k / L} Gamma(1 - pi i k / L) / L.
inline double cycling_profile_fourier(double x, double lambdaT, int k_max = 64) {
    if (!(lambdaT > 0.0)) throw std::domain_error("cycling profile: lambdaT must be > 0");
    double q = 1.0 / lambdaT; // a_0, Gamma(1) = 1
    for (int k = 1; k <= k_max; ++k) {
        const double w = std::numbers::pi * k / lambdaT;
        const std::complex<double> i_w(0.0, w);
        const std::complex<double> a_k =
            std::exp(-i_w * std::log(2.0) + log_gamma(std::complex<double>(1.0, -w))) / lambdaT;
        const std::complex<double> e(std::cos(two_pi * k * x), std::sin(two_pi * k * x));
        q += 2.0 * std::real(a_k * e);
    }
    return q;
}

// ---------------------------------------------------------------------------
// TheoreticalLaw: a tagged family with pdf / cdf / sampler.  The cycling
// profile enters as the law of [(Z - log 2)/2 mod L] on [0, L).
struct Law {
    enum class Family {
        gumbel,          // loc a, scale b
        half_gumbel,     // (Z - log2)/2 + a
        theta,           // Theta + a
        logistic,        // loc a, scale b
        cycling_profile, // a = lambdaT, support [0, a)
        asymp_geometric, // success probability a, values 1,2,...
        exponential      // rate a, support [0, inf)
    };

    Family family = Family::gumbel;
    double a = 0.0;
    double b = 1.0;

    static Law gumbel(double loc = 0.0, double scale = 1.0) {
        return {Family::gumbel, loc, scale};
    }
    static Law half_gumbel(double loc = 0.0) { return {Family::half_gumbel, loc, 1.0}; }
    static Law theta_law(double loc = 0.0) { return {Family::theta, loc, 1.0}; }
    static Law logistic(double loc = 0.0, double scale = 1.0) {
        return {Family::logistic, loc, scale};
    }
    static Law cycling_profile(double lambdaT) { return {Family::cycling_profile, lambdaT, 1.0}; }
    static Law asymp_geometric(double p) { return {Family::asymp_geometric, p, 1.0}; }
    static Law exponential(double rate = 1.0) { return {Family::exponential, rate, 1.0}; }

    double pdf(double x) const {
        switch (family) {
        case Family::gumbel:
            return gumbel_pdf((x - a) / b) / b;
        case Family::half_gumbel:
            return a_density(x - a);
        case Family::theta:
            return theta_law_density(x - a);
        case Family::logistic: {
            const double c = std::cosh((x - a) / (2.0 * b));
            return 1.0 / (4.0 * b * c * c);
        }
        case Family::cycling_profile: {
            double s = 0.0;
            const int w = detail::cycling_auto_window(a);
            for (int n = -w; n <= w; ++n) s += a_density(x + n * a);
            return (x >= 0.0 && x < a) ? s : 0.0;
        }
        case Family::asymp_geometric: {
            const double n = std::round(x);
            if (n < 1.0 || std::abs(n - x) > 1e-9) return 0.0;
            return a * std::pow(1.0 - a, n - 1.0);
        }
        case Family::exponential:
            return x >= 0.0 ? a * std::exp(-a * x) : 0.0;
        }
        return 0.0;
    }

    double cdf(double x) const {
        switch (family) {
        case Family::gumbel:
            return gumbel_cdf((x - a) / b);
        case Family::half_gumbel:
            return a_cdf(x - a);
        case Family::theta:
            return theta_law_cdf(x - a);
        case Family::logistic:
            return 1.0 / (1.0 + std::exp(-(x - a) / b));
        case Family::cycling_profile: {
            if (x <= 0.0) return 0.0;
            if (x >= a) return 1.0;
            double s = 0.0;
            const int w = detail::cycling_auto_window(a);
            for (int n = -w; n <= w; ++n) s += a_cdf(x + n * a) - a_cdf(n * a);
            return s;
        }
        case Family::asymp_geometric: {
            const double n = std::floor(x);
            if (n < 1.0) return 0.0;
            return 1.0 - std::pow(1.0 - a, n);
        }
        case Family::exponential:
            return x >= 0.0 ? 1.0 - std::exp(-a * x) : 0.0;
        }
        return 0.0;
    }

    double sample(Rng& rng) const {
        switch (family) {
        case Family::gumbel:
            return a + b * gumbel_sample(rng);
        case Family::half_gumbel:
            return a + 0.5 * (gumbel_sample(rng) - std::log(2.0));
        case Family::theta:
            return a + theta_law_sample(rng);
        case Family::logistic: {
            const double u = rng.uniform();
            return a + b * std::log(u / (1.0 - u));
        }
        case Family::cycling_profile:
            return wrap(0.5 * (gumbel_sample(rng) - std::log(2.0)), a);
        case Family::asymp_geometric:
            return std::ceil(std::log(rng.uniform()) / std::log(1.0 - a));
        case Family::exponential:
            return rng.exponential() / a;
        }
        return 0.0;
    }

    std::string name() const {
        switch (family) {
        case Family::gumbel:
            return "gumbel";
        case Family::half_gumbel:
            return "half_gumbel";
        case Family::theta:
            return "theta";
        case Family::logistic:
            return "logistic";
        case Family::cycling_profile:
            return "cycling_profile";
        case Family::asymp_geometric:
            return "asymp_geometric";
        case Family::exponential:
            return "exponential";
        }
        return "?";
    }
};

// ---------------------------------------------------------------------------
// Limiting hazard of an integer sample:  p = lim P(Y = n+1 | Y > n).
// Pooled geometric MLE over the deepest tail window that keeps adequate
// counts, with a percentile bootstrap CI.
struct TailFit {
    double p_hat = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 1.0;
    long threshold = 0;   // tail window is {Y > threshold}
    long tail_count = 0;
    bool flagged = false; // degenerate or insufficient tail mass
};

inline TailFit asymp_geometric_tail_fit(const std::vector<long>& samples,
                                        std::uint64_t boot_seed = 1234,
                                        int n_boot = 400,
                                        long min_tail_count = 200) {
    if (samples.size() < 1000)
        throw std::invalid_argument("asymp_geometric_tail_fit needs at least 1000 samples");
    TailFit fit;

    long y_max = 0;
    for (long y : samples) y_max = std::max(y_max, y);

    auto pooled = [&](const std::vector<long>& xs, long m) {
        // conditional on Y > m, Y - m is geometric(p); MLE p = K / sum(Y - m)
        long k = 0;
        long exposure = 0;
        for (long y : xs)
            if (y > m) {
                ++k;
                exposure += y - m;
            }
        return exposure > 0 ? static_cast<double>(k) / static_cast<double>(exposure) : 1.0;
    };

    // deepest threshold with enough tail mass
    long m = 0;
    {
        std::vector<long> counts(static_cast<std::size_t>(y_max) + 2, 0);
        for (long y : samples) ++counts[static_cast<std::size_t>(std::max<long>(y, 0))];
        long above = static_cast<long>(samples.size());
        for (long n = 0; n <= y_max; ++n) {
            above -= counts[static_cast<std::size_t>(n)];
            if (above >= min_tail_count)
                m = n;
            else
                break;
        }
    }
    fit.threshold = m;

    long distinct_above = 0;
    {
        std::vector<long> tail;
        for (long y : samples)
            if (y > m) tail.push_back(y);
        fit.tail_count = static_cast<long>(tail.size());
        std::vector<long> sorted = tail;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i)
            if (i == 0 || sorted[i] != sorted[i - 1]) ++distinct_above;

        fit.p_hat = pooled(samples, m);
        if (fit.tail_count < 10 || distinct_above < 2) {
            fit.flagged = true; // hazard limit undefined (e.g. point mass)
            fit.ci_lo = 0.0;
            fit.ci_hi = 1.0;
            return fit;
        }

        Rng rng(boot_seed);
        std::vector<double> boots(static_cast<std::size_t>(n_boot));
        std::vector<long> resample(tail.size());
        for (int bIdx = 0; bIdx < n_boot; ++bIdx) {
            for (auto& v : resample)
                v = tail[static_cast<std::size_t>(rng.below(tail.size()))];
            boots[static_cast<std::size_t>(bIdx)] = pooled(resample, m);
        }
        std::sort(boots.begin(), boots.end());
        fit.ci_lo = boots[static_cast<std::size_t>(0.025 * n_boot)];
        fit.ci_hi = boots[static_cast<std::size_t>(std::min(n_boot - 1.0, 0.975 * n_boot))];
        if (fit.tail_count < min_tail_count) fit.flagged = true; // widened-CI flag
    }
    return fit;
}

} // namespace slipsim
