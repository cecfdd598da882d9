// Statistical verification toolkit: empirical distributions, one- and
// two-sample Kolmogorov-Smirnov, circular Kuiper tests, Gumbel location
// fits, and bootstrap confidence intervals.

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "slipsim/laws.hpp"
#include "slipsim/numerics.hpp"
#include "slipsim/rng.hpp"
#include "slipsim/special.hpp"

namespace slipsim {

class EmpiricalDistribution {
  public:
    EmpiricalDistribution() = default;
    explicit EmpiricalDistribution(std::vector<double> values) : v_(std::move(values)) {
        std::sort(v_.begin(), v_.end());
    }

    std::size_t size() const { return v_.size(); }
    const std::vector<double>& sorted() const { return v_; }

    // right-continuous empirical CDF
    double cdf(double x) const {
        const auto it = std::upper_bound(v_.begin(), v_.end(), x);
        return static_cast<double>(it - v_.begin()) / static_cast<double>(v_.size());
    }

    double quantile(double q) const {
        const auto idx = static_cast<std::size_t>(
            std::min<double>(static_cast<double>(v_.size()) - 1.0,
                             std::max(0.0, q * static_cast<double>(v_.size()))));
        return v_[idx];
    }

  private:
    std::vector<double> v_;
};

struct TestReport {
    double statistic = 0.0;
    double p_value = 0.0;
    double critical_1pct = 0.0;
    double critical_5pct = 0.0;
    std::size_t n = 0;
    bool pass_1pct = false;
    bool pass_5pct = false;
};

// ---------------------------------------------------------------------------
// One-sample KS against a CDF.
template <class Cdf>
    requires std::invocable<Cdf&, double>
TestReport ks_test(const EmpiricalDistribution& sample, Cdf&& cdf) {
    const auto& x = sample.sorted();
    const std::size_t n = x.size();
    if (n < 1) throw std::invalid_argument("ks_test: empty sample");
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = cdf(x[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    TestReport rep;
    rep.statistic = d;
    rep.n = n;
    rep.p_value = ks_p_value(d, static_cast<double>(n));
    rep.critical_1pct = ks_critical(0.01, static_cast<double>(n));
    rep.critical_5pct = ks_critical(0.05, static_cast<double>(n));
    rep.pass_1pct = d < rep.critical_1pct;
    rep.pass_5pct = d < rep.critical_5pct;
    return rep;
}

inline TestReport ks_test(const EmpiricalDistribution& sample, const Law& law) {
    return ks_test(sample, [&](double x) { return law.cdf(x); });
}

// Two-sample KS with effective size n1 n2 / (n1 + n2).
inline TestReport ks_test_two_sample(const EmpiricalDistribution& a,
                                     const EmpiricalDistribution& b) {
    const auto& x = a.sorted();
    const auto& y = b.sorted();
    if (x.empty() || y.empty()) throw std::invalid_argument("ks_test_two_sample: empty sample");
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
        if (x[i] <= y[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / x.size() -
                                 static_cast<double>(j) / y.size()));
    }
    const double n_eff = static_cast<double>(x.size()) * static_cast<double>(y.size()) /
                         static_cast<double>(x.size() + y.size());
    TestReport rep;
    rep.statistic = d;
    rep.n = std::min(x.size(), y.size());
    rep.p_value = ks_p_value(d, n_eff);
    rep.critical_1pct = ks_critical(0.01, n_eff);
    rep.critical_5pct = ks_critical(0.05, n_eff);
    rep.pass_1pct = d < rep.critical_1pct;
    rep.pass_5pct = d < rep.critical_5pct;
    return rep;
}

// ---------------------------------------------------------------------------
// Kuiper test for circular data on [0, L): V = D+ + D-, invariant under
// rotations of sample and law together.
template <class Cdf>
    requires std::invocable<Cdf&, double>
TestReport kuiper_test_circular(std::vector<double> sample, double L, Cdf&& cdf) {
    if (!(L > 0.0)) throw std::invalid_argument("kuiper_test_circular: L must be > 0");
    for (auto& v : sample) v = wrap(v, L);
    std::sort(sample.begin(), sample.end());
    const std::size_t n = sample.size();
    double d_plus = 0.0, d_minus = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = cdf(sample[i]);
        d_plus = std::max(d_plus, static_cast<double>(i + 1) / n - f);
        d_minus = std::max(d_minus, f - static_cast<double>(i) / n);
    }
    TestReport rep;
    rep.statistic = d_plus + d_minus;
    rep.n = n;
    rep.p_value = kuiper_p_value(rep.statistic, static_cast<double>(n));
    rep.critical_1pct = kuiper_critical(0.01, static_cast<double>(n));
    rep.critical_5pct = kuiper_critical(0.05, static_cast<double>(n));
    rep.pass_1pct = rep.statistic < rep.critical_1pct;
    rep.pass_5pct = rep.statistic < rep.critical_5pct;
    return rep;
}

inline TestReport kuiper_test_two_sample(std::vector<double> a, std::vector<double> b, double L) {
    for (auto& v : a) v = wrap(v, L);
    for (auto& v : b) v = wrap(v, L);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d_plus = 0.0, d_minus = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        const double diff =
            static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size();
        d_plus = std::max(d_plus, diff);
        d_minus = std::max(d_minus, -diff);
    }
    const double n_eff = static_cast<double>(a.size()) * static_cast<double>(b.size()) /
                         static_cast<double>(a.size() + b.size());
    TestReport rep;
    rep.statistic = d_plus + d_minus;
    rep.n = std::min(a.size(), b.size());
    rep.p_value = kuiper_p_value(rep.statistic, n_eff);
    rep.critical_1pct = kuiper_critical(0.01, n_eff);
    rep.critical_5pct = kuiper_critical(0.05, n_eff);
    rep.pass_1pct = rep.statistic < rep.critical_1pct;
    rep.pass_5pct = rep.statistic < rep.critical_5pct;
    return rep;
}

// ---------------------------------------------------------------------------
// Closed-form Gumbel location MLE at known scale:
//   mu = -s log( mean(e^{-x_i/s}) ),
// with a percentile bootstrap interval.
struct LocationFit {
    double location = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

inline double gumbel_location_mle(const std::vector<double>& x, double scale) {
    if (x.empty()) throw std::invalid_argument("gumbel_location_mle: empty sample");
    // log-sum-exp with the max shifted out
    double m = -x[0] / scale;
    for (double v : x) m = std::max(m, -v / scale);
    double s = 0.0;
    for (double v : x) s += std::exp(-v / scale - m);
    return -scale * (m + std::log(s / static_cast<double>(x.size())));
}

inline LocationFit gumbel_location_fit(const std::vector<double>& x, double scale,
                                       std::uint64_t boot_seed = 99, int n_boot = 400) {
    LocationFit fit;
    fit.location = gumbel_location_mle(x, scale);
    Rng rng(boot_seed);
    std::vector<double> boots(static_cast<std::size_t>(n_boot));
    std::vector<double> res(x.size());
    for (int bi = 0; bi < n_boot; ++bi) {
        for (auto& v : res) v = x[static_cast<std::size_t>(rng.below(x.size()))];
        boots[static_cast<std::size_t>(bi)] = gumbel_location_mle(res, scale);
    }
    std::sort(boots.begin(), boots.end());
    fit.ci_lo = boots[static_cast<std::size_t>(0.025 * n_boot)];
    fit.ci_hi = boots[static_cast<std::size_t>(std::min(n_boot - 1.0, 0.975 * n_boot))];
    return fit;
}

// generic percentile bootstrap of a statistic
template <class Stat>
LocationFit bootstrap_ci(const std::vector<double>& x, Stat&& stat, std::uint64_t seed = 7,
                         int n_boot = 400) {
    LocationFit fit;
    fit.location = stat(x);
    Rng rng(seed);
    std::vector<double> boots(static_cast<std::size_t>(n_boot));
    std::vector<double> res(x.size());
    for (int bi = 0; bi < n_boot; ++bi) {
        for (auto& v : res) v = x[static_cast<std::size_t>(rng.below(x.size()))];
        boots[static_cast<std::size_t>(bi)] = stat(res);
    }
    std::sort(boots.begin(), boots.end());
    fit.ci_lo = boots[static_cast<std::size_t>(0.025 * n_boot)];
    fit.ci_hi = boots[static_cast<std::size_t>(std::min(n_boot - 1.0, 0.975 * n_boot))];
    return fit;
}

// circular location on [0, L): argument of the mean resultant vector
inline double circular_location(const std::vector<double>& x, double L) {
    double cs = 0.0, sn = 0.0;
    for (double v : x) {
        const double ang = two_pi * v / L;
        cs += std::cos(ang);
        sn += std::sin(ang);
    }
    return wrap(L * std::atan2(sn, cs) / two_pi, L);
}

// signed circular difference a - b reduced to [-L/2, L/2)
inline double circular_diff(double a, double b, double L) {
    double d = wrap(a - b, L);
    if (d >= 0.5 * L) d -= L;
    return d;
}

inline double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("pearson_correlation: size mismatch");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

// total variation distance between two histograms of samples on [lo, hi]
inline double tv_distance_binned(const std::vector<double>& a, const std::vector<double>& b,
                                 double lo, double hi, int bins) {
    std::vector<double> ha(static_cast<std::size_t>(bins), 0.0),
        hb(static_cast<std::size_t>(bins), 0.0);
    auto fill = [&](const std::vector<double>& xs, std::vector<double>& h) {
        for (double x : xs) {
            int k = static_cast<int>((x - lo) / (hi - lo) * bins);
            k = std::clamp(k, 0, bins - 1);
            h[static_cast<std::size_t>(k)] += 1.0 / static_cast<double>(xs.size());
        }
    };
    fill(a, ha);
    fill(b, hb);
    double tv = 0.0;
    for (int k = 0; k < bins; ++k)
        tv += std::abs(ha[static_cast<std::size_t>(k)] - hb[static_cast<std::size_t>(k)]);
    return 0.5 * tv;
}

// permutation test p-value that two samples share a law (two-sample KS statistic)
inline double permutation_test_p(const std::vector<double>& a, const std::vector<double>& b,
                                 std::uint64_t seed = 11, int n_perm = 200) {
    const double observed =
        ks_test_two_sample(EmpiricalDistribution(a), EmpiricalDistribution(b)).statistic;
    std::vector<double> pool(a);
    pool.insert(pool.end(), b.begin(), b.end());
    Rng rng(seed);
    int exceed = 0;
    std::vector<double> pa(a.size()), pb(b.size());
    for (int p = 0; p < n_perm; ++p) {
        // Fisher-Yates shuffle of the pool
        for (std::size_t i = pool.size() - 1; i > 0; --i)
            std::swap(pool[i], pool[static_cast<std::size_t>(rng.below(i + 1))]);
        pa.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(a.size()));
        pb.assign(pool.begin() + static_cast<std::ptrdiff_t>(a.size()), pool.end());
        const double d =
            ks_test_two_sample(EmpiricalDistribution(pa), EmpiricalDistribution(pb)).statistic;
        if (d >= observed) ++exceed;
    }
    return (exceed + 1.0) / (n_perm + 1.0);
}

// ---------------------------------------------------------------------------
// Law-level identity checks.

// Law(Z/2 + Theta) = Law(Z + log2 / 2): two-sample KS plus a numeric
// characteristic-function comparison on t in [-5, 5].
struct DuplicationReport {
    TestReport ks;
    double max_cf_error = 0.0;
};

inline DuplicationReport duplication_identity_check(std::size_t n_samples, Rng& rng) {
    std::vector<double> lhs(n_samples), rhs(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        lhs[i] = 0.5 * gumbel_sample(rng) + theta_law_sample(rng);
        rhs[i] = gumbel_sample(rng) + 0.5 * std::log(2.0);
    }
    DuplicationReport rep;
    rep.ks = ks_test_two_sample(EmpiricalDistribution(std::move(lhs)),
                                EmpiricalDistribution(std::move(rhs)));
    // E[e^{itZ}] = Gamma(1 - it), E[e^{it Theta}] = 2^{-it/2} Gamma((1-it)/2) / sqrt(pi)
    for (double t = -5.0; t <= 5.0 + 1e-12; t += 0.5) {
        const std::complex<double> it(0.0, t);
        const std::complex<double> cf_lhs =
            cgamma(1.0 - 0.5 * it) *
            (std::exp(-0.5 * it * std::log(2.0)) * cgamma(0.5 * (1.0 - it)) /
             std::sqrt(std::numbers::pi));
        const std::complex<double> cf_rhs = cgamma(1.0 - it) * std::exp(0.5 * it * std::log(2.0));
        rep.max_cf_error = std::max(rep.max_cf_error, std::abs(cf_lhs - cf_rhs));
    }
    return rep;
}

// Z1 - Z2 for independent standard Gumbels is standard logistic.
inline TestReport logistic_residence_check(std::size_t n_samples, Rng& rng) {
    std::vector<double> d(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i)
        d[i] = gumbel_sample(rng) - gumbel_sample(rng);
    return ks_test(EmpiricalDistribution(std::move(d)), Law::logistic(0.0, 1.0));
}

} // namespace slipsim
