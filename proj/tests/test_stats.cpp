#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "slipsim/laws.hpp"
#include "slipsim/rng.hpp"
#include "slipsim/stats.hpp"

using namespace slipsim;

TEST_CASE("KS test calibration on the null") {
    // sample drawn from the law itself: p > 0.01 in at least 98 of 100 seeds
    const Law law = Law::gumbel(0.0, 1.0);
    int ok = 0;
    for (int seed = 0; seed < 100; ++seed) {
        Rng rng(1000 + static_cast<std::uint64_t>(seed));
        std::vector<double> xs(10000);
        for (auto& x : xs) x = law.sample(rng);
        const auto rep = ks_test(EmpiricalDistribution(std::move(xs)), law);
        if (rep.p_value > 0.01) ++ok;
    }
    CHECK(ok >= 98);
}

TEST_CASE("KS degenerate and range properties") {
    // constant sample against a continuous law
    std::vector<double> xs(500, 0.0);
    const auto rep = ks_test(EmpiricalDistribution(xs), Law::gumbel());
    CHECK(rep.statistic >= 0.5);
    CHECK(rep.statistic <= 1.0);

    Rng rng(4);
    for (int rep_i = 0; rep_i < 10; ++rep_i) {
        std::vector<double> ys(200);
        for (auto& y : ys) y = rng.normal() * (1.0 + rep_i);
        const auto r = ks_test(EmpiricalDistribution(std::move(ys)), Law::gumbel());
        CHECK(r.statistic >= 0.0);
        CHECK(r.statistic <= 1.0);
    }
}

TEST_CASE("KS is invariant under a monotone relabeling of sample and law") {
    Rng rng(99);
    const Law law = Law::theta_law(0.3);
    std::vector<double> xs(5000);
    for (auto& x : xs) x = law.sample(rng);
    const auto direct = ks_test(EmpiricalDistribution(xs), law);

    // probability integral transform: u = F(x) against the uniform law
    std::vector<double> us(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) us[i] = law.cdf(xs[i]);
    const auto transformed =
        ks_test(EmpiricalDistribution(std::move(us)), [](double u) {
            return std::min(1.0, std::max(0.0, u));
        });
    CHECK(std::abs(direct.statistic - transformed.statistic) < 1e-12);
}

TEST_CASE("Kuiper test: rotation invariance and calibration") {
    Rng rng(7);
    std::vector<double> xs(2000);
    for (auto& x : xs) x = rng.uniform();
    auto uniform_cdf = [](double x) { return x; };

    const auto base = kuiper_test_circular(xs, 1.0, uniform_cdf);
    std::vector<double> rotated(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) rotated[i] = wrap(xs[i] + 0.37119, 1.0);
    const auto rot = kuiper_test_circular(rotated, 1.0, uniform_cdf);
    CHECK(std::abs(base.statistic - rot.statistic) < 1e-12);

    int ok = 0;
    for (int seed = 0; seed < 100; ++seed) {
        Rng r2(5000 + static_cast<std::uint64_t>(seed));
        std::vector<double> ys(10000);
        for (auto& y : ys) y = r2.uniform();
        const auto rep = kuiper_test_circular(ys, 1.0, uniform_cdf);
        if (rep.statistic < rep.critical_1pct) ++ok;
    }
    CHECK(ok >= 98);

    // point mass against the uniform density
    std::vector<double> pm(1000, 0.4);
    const auto degenerate = kuiper_test_circular(pm, 1.0, uniform_cdf);
    CHECK(degenerate.statistic > 0.9);
}

TEST_CASE("Gumbel location fit") {
    Rng rng(606);
    std::vector<double> xs(100000);
    const Law law = Law::gumbel(2.0, 1.0);
    for (auto& x : xs) x = law.sample(rng);
    const auto fit = gumbel_location_fit(xs, 1.0);
    CHECK(fit.ci_lo <= 2.0);
    CHECK(2.0 <= fit.ci_hi);

    // exact equivariance under shifts
    std::vector<double> shifted(xs);
    for (auto& x : shifted) x += 1.25;
    CHECK(gumbel_location_mle(shifted, 1.0) ==
          Catch::Approx(gumbel_location_mle(xs, 1.0) + 1.25).margin(1e-12));

    // single observation: the closed form degenerates to the sample point
    CHECK(gumbel_location_mle({3.7}, 1.0) == Catch::Approx(3.7).margin(1e-12));
    CHECK(gumbel_location_mle({3.7}, 0.5) == Catch::Approx(3.7).margin(1e-12));
}

TEST_CASE("bootstrap location CIs cover the truth") {
    int covered = 0;
    for (int rep = 0; rep < 100; ++rep) {
        Rng rng(9000 + static_cast<std::uint64_t>(rep));
        std::vector<double> xs(200);
        for (auto& x : xs) x = Law::gumbel(1.5, 1.0).sample(rng);
        const auto fit =
            gumbel_location_fit(xs, 1.0, 17 + static_cast<std::uint64_t>(rep), 300);
        if (fit.ci_lo <= 1.5 && 1.5 <= fit.ci_hi) ++covered;
    }
    CHECK(covered >= 90);
}

TEST_CASE("two-sample tests accept same-law samples") {
    Rng rng(2211);
    std::vector<double> a(20000), b(20000);
    for (auto& x : a) x = Law::theta_law().sample(rng);
    for (auto& x : b) x = Law::theta_law().sample(rng);
    CHECK(ks_test_two_sample(EmpiricalDistribution(a), EmpiricalDistribution(b)).pass_1pct);

    std::vector<double> ca(8000), cb(8000);
    for (auto& x : ca) x = wrap(Law::half_gumbel().sample(rng), two_pi);
    for (auto& x : cb) x = wrap(Law::half_gumbel().sample(rng), two_pi);
    CHECK(kuiper_test_two_sample(ca, cb, two_pi).pass_1pct);

    CHECK(permutation_test_p(std::vector<double>(a.begin(), a.begin() + 2000),
                             std::vector<double>(b.begin(), b.begin() + 2000)) > 0.01);
}

TEST_CASE("circular location fit and differences") {
    Rng rng(314);
    const double L = two_pi;
    std::vector<double> xs(20000);
    for (auto& x : xs) x = wrap(1.0 + 0.3 * rng.normal(), L);
    const double loc = circular_location(xs, L);
    CHECK(std::abs(circular_diff(loc, 1.0, L)) < 0.02);

    CHECK(circular_diff(0.1, L - 0.1, L) == Catch::Approx(0.2).margin(1e-12));
    CHECK(circular_diff(L - 0.1, 0.1, L) == Catch::Approx(-0.2).margin(1e-12));
}
