#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "slipsim/laws.hpp"
#include "slipsim/numerics.hpp"
#include "slipsim/rng.hpp"
#include "slipsim/special.hpp"
#include "slipsim/stats.hpp"

using namespace slipsim;

namespace {

// asymptotic 1% KS band used across the sampler checks
double ks_band_1pct(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

} // namespace

TEST_CASE("standard Gumbel cdf and functional equations") {
    CHECK(gumbel_cdf(0.0) == Catch::Approx(0.36787944117144233).epsilon(1e-14));

    // max-stability: Lambda(x)^2 = Lambda(x - log 2)
    for (double x : {-1.0, 0.0, 2.0}) {
        const double lhs = gumbel_cdf(x) * gumbel_cdf(x);
        const double rhs = gumbel_cdf(x - std::log(2.0));
        CHECK(std::abs(lhs - rhs) < 1e-12);
    }
    // self-map identity: Lambda(e^{-x}) = e^{-Lambda(x)}
    for (double x : {-1.0, 0.0, 1.0}) {
        CHECK(std::abs(gumbel_cdf(std::exp(-x)) - std::exp(-gumbel_cdf(x))) < 1e-12);
    }
}

TEST_CASE("A-density: normalization, antiderivative, mode") {
    const double total = integrate([](double x) { return a_density(x); }, -15.0, 40.0, 1e-12);
    CHECK(std::abs(total - 1.0) < 1e-10);

    // a_cdf is the antiderivative of a_density
    for (double x : {-1.0, -0.3466, 0.0, 0.7, 2.5}) {
        const double d = derivative([](double y) { return a_cdf(y); }, x, 1e-4);
        CHECK(std::abs(d - a_density(x)) < 1e-8);
    }

    // mode at -log(2)/2: solve A' = 0 -> e^{-2x} = 2
    const double mode = -0.5 * std::log(2.0);
    CHECK(a_density(mode) > a_density(mode + 1e-3));
    CHECK(a_density(mode) > a_density(mode - 1e-3));
    const double da = derivative([](double y) { return a_density(y); }, mode, 1e-5);
    CHECK(std::abs(da) < 1e-9);
}

TEST_CASE("sampling (Z - log 2)/2 matches the A density") {
    Rng rng(2024);
    const std::size_t n = 1000000;
    std::vector<double> xs(n);
    for (auto& x : xs) x = 0.5 * (gumbel_sample(rng) - std::log(2.0));
    const auto rep = ks_test(EmpiricalDistribution(std::move(xs)),
                             [](double x) { return a_cdf(x); });
    CHECK(rep.statistic < ks_band_1pct(n));
}

TEST_CASE("cycling profile: periodicity, normalization, two representations") {
    for (double x : {0.1, 0.37}) {
        CHECK(std::abs(cycling_profile_sum(x + 1.0, two_pi) - cycling_profile_sum(x, two_pi)) <
              1e-10);
    }
    // integral over one period equals 1 / lambdaT (the zeroth Fourier mode)
    for (double lt : {1.0, two_pi}) {
        const double q = integrate([&](double x) { return cycling_profile_sum(x, lt); }, 0.0,
                                   1.0, 1e-12);
        CHECK(std::abs(q - 1.0 / lt) < 1e-8);
    }
    CHECK(std::abs(cycling_profile_sum(0.25, two_pi) -
                   cycling_profile_fourier(0.25, two_pi, 64)) < 1e-8);

    // agreement on a 256-point grid for lambdaT in {1, 2 pi, 10}
    for (double lt : {1.0, two_pi, 10.0}) {
        double worst = 0.0;
        for (int i = 0; i < 256; ++i) {
            const double x = i / 256.0;
            worst = std::max(worst, std::abs(cycling_profile_sum(x, lt) -
                                             cycling_profile_fourier(x, lt, 96)));
        }
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("cycling profile is elliptic: imaginary period pi i / lambdaT") {
    for (double lt : {1.0, two_pi}) {
        const std::complex<double> period(0.0, std::numbers::pi / lt);
        for (double x : {0.05, 0.33, 0.71}) {
            const std::complex<double> z(x, 0.0);
            const auto diff = cycling_profile_sum(z + period, lt) - cycling_profile_sum(z, lt);
            CHECK(std::abs(diff) < 1e-8);
        }
    }
}

TEST_CASE("Theta law: normalization, tail value, sampler") {
    const double total =
        integrate([](double t) { return theta_law_density(t); }, -15.0, 40.0, 1e-12);
    CHECK(std::abs(total - 1.0) < 1e-10);

    // P(Theta <= 0) = P(|N| >= 1) = 2 Phi_bar(1)
    CHECK(theta_law_cdf(0.0) == Catch::Approx(0.3173105078629141).epsilon(1e-12));

    Rng rng(77);
    const std::size_t n = 1000000;
    std::vector<double> xs(n);
    for (auto& x : xs) x = theta_law_sample(rng);
    const auto rep = ks_test(EmpiricalDistribution(std::move(xs)),
                             [](double t) { return theta_law_cdf(t); });
    CHECK(rep.statistic < ks_band_1pct(n));
}

TEST_CASE("duplication lemma: Law(Z/2 + Theta) = Law(Z + log2 / 2)") {
    // characteristic function values
    CHECK(std::abs(cgamma({1.0, 0.0}) - std::complex<double>(1.0, 0.0)) < 1e-12);

    // E[e^{i t Theta}] = 2^{-it/2} Gamma((1-it)/2) / sqrt(pi) against quadrature
    const std::complex<double> it(0.0, 1.0);
    const std::complex<double> formula = std::exp(-0.5 * it * std::log(2.0)) *
                                         cgamma(0.5 * (1.0 - it)) / std::sqrt(std::numbers::pi);
    const double re = integrate(
        [](double t) { return std::cos(t) * theta_law_density(t); }, -12.0, 40.0, 1e-10);
    const double im = integrate(
        [](double t) { return std::sin(t) * theta_law_density(t); }, -12.0, 40.0, 1e-10);
    CHECK(std::abs(formula - std::complex<double>(re, im)) < 1e-6);

    Rng rng(31337);
    const auto rep = duplication_identity_check(1000000, rng);
    CHECK(rep.ks.pass_1pct);
    CHECK(rep.max_cf_error < 1e-6);
}

TEST_CASE("difference of Gumbels is logistic") {
    Rng rng(5511);
    const std::size_t n = 1000000;
    std::vector<double> d(n);
    for (auto& x : d) x = gumbel_sample(rng) - gumbel_sample(rng);
    CHECK(std::abs(mean(d)) < 4.0 * std::sqrt(std::numbers::pi * std::numbers::pi / 3.0 / n));
    CHECK(variance(d) == Catch::Approx(std::numbers::pi * std::numbers::pi / 3.0).epsilon(0.01));

    const auto rep = ks_test(EmpiricalDistribution(std::move(d)), Law::logistic(0.0, 1.0));
    CHECK(rep.pass_1pct);

    Rng rng2(5512);
    CHECK(logistic_residence_check(1000000, rng2).pass_1pct);
}

TEST_CASE("law densities integrate to one and samplers match densities") {
    const std::vector<Law> laws = {Law::gumbel(0.3, 1.0),  Law::half_gumbel(0.2),
                                   Law::theta_law(-0.1),   Law::logistic(0.05, 0.5),
                                   Law::cycling_profile(two_pi), Law::exponential(1.5)};
    Rng rng(90210);
    for (const auto& law : laws) {
        INFO(law.name());
        double lo = -20.0, hi = 40.0;
        if (law.family == Law::Family::cycling_profile) {
            lo = 0.0;
            hi = law.a;
        }
        if (law.family == Law::Family::exponential) {
            lo = 0.0;
            hi = 40.0;
        }
        const double total = integrate([&](double x) { return law.pdf(x); }, lo, hi, 1e-12);
        CHECK(std::abs(total - 1.0) < 1e-8);

        const std::size_t n = 1000000;
        std::vector<double> xs(n);
        for (auto& x : xs) x = law.sample(rng);
        const auto rep = ks_test(EmpiricalDistribution(std::move(xs)), law);
        CHECK(rep.statistic < ks_band_1pct(n));
    }
}

TEST_CASE("asymptotically geometric tail fit") {
    Rng rng(808);

    SECTION("exact geometric recovers p") {
        const double p = 0.3;
        std::vector<long> ys(100000);
        for (auto& y : ys)
            y = static_cast<long>(std::ceil(std::log(rng.uniform()) / std::log(1.0 - p)));
        const auto fit = asymp_geometric_tail_fit(ys);
        CHECK_FALSE(fit.flagged);
        CHECK(fit.ci_lo <= p);
        CHECK(p <= fit.ci_hi);
        CHECK(std::abs(fit.p_hat - p) < 3.0 * (fit.ci_hi - fit.ci_lo) / 3.92);
    }

    SECTION("degenerate point mass is flagged") {
        std::vector<long> ys(2000, 5);
        const auto fit = asymp_geometric_tail_fit(ys);
        CHECK(fit.flagged);
    }

    SECTION("mixture with geometric tail from n >= 3") {
        const double p = 0.25;
        std::vector<long> ys(100000);
        for (auto& y : ys) {
            const double u = rng.uniform();
            if (u < 0.4)
                y = 1;
            else if (u < 0.7)
                y = 2;
            else
                y = 2 + static_cast<long>(
                            std::ceil(std::log(rng.uniform()) / std::log(1.0 - p)));
        }
        const auto fit = asymp_geometric_tail_fit(ys);
        CHECK_FALSE(fit.flagged);
        CHECK(fit.ci_lo <= p);
        CHECK(p <= fit.ci_hi);
    }
}
