#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "slipsim/dynamics.hpp"
#include "slipsim/orbit.hpp"
#include "slipsim/stats.hpp"
#include "slipsim/systems.hpp"

using namespace slipsim;

TEST_CASE("Euler-Maruyama step: zero-noise behaviour on and off orbits") {
    const auto sys = build_melnikov_system(0.0, 1.0);
    State st{-0.5, 0.0, 0.0};
    Rng rng(1);
    step_em(sys, st, 1e-3, 0.0, std::sqrt(1e-3), rng);
    CHECK(st.r == Catch::Approx(-0.5).margin(1e-15)); // f_r = 0 on the stable orbit
    CHECK(st.phi == Catch::Approx(1e-3).margin(1e-15));

    State st2{-0.25, 0.0, 0.0};
    step_em(sys, st2, 1e-3, 0.0, std::sqrt(1e-3), rng);
    CHECK(st2.r < -0.25); // f_r = sin(-pi/2) = -1 < 0
}

TEST_CASE("zero-noise flow converges to the stable orbit within ODE tolerance") {
    const auto sys = build_melnikov_system(0.05, 1.0);
    State st{-0.25, 0.0, 0.0};
    Rng rng(1);
    const double dt = 1e-4;
    for (int i = 0; i < 50000; ++i) step_em(sys, st, dt, 0.0, std::sqrt(dt), rng);
    CHECK(std::abs(st.r + 0.5) < 1e-6 * st.t);
}

TEST_CASE("noise variance accumulates as n sigma^2 dt for a pure-diffusion radius") {
    // lambda = 0 turns the linearized system into pure diffusion in r
    const LinearOrbitSystem sys{0.0, 1.0};
    const double dt = 1e-3, sigma = 0.7;
    const int n_steps = 20;
    const std::size_t n_rep = 100000;
    auto batch = run_batch(n_rep, 99, 1, [&](std::size_t, Rng& rng) {
        State st{0.0, 0.0, 0.0};
        for (int i = 0; i < n_steps; ++i) step_em(sys, st, dt, sigma, std::sqrt(dt), rng);
        return st.r;
    });
    const double expected = n_steps * sigma * sigma * dt;
    const double se = expected * std::sqrt(2.0 / static_cast<double>(n_rep));
    CHECK(std::abs(variance(batch.records) - expected) < 3.0 * se);
}

TEST_CASE("first passage: deterministic start inside basin is killed by max_time") {
    const auto sys = build_melnikov_system(0.0, 1.0);
    SimConfig cfg;
    cfg.sigma = 0.0;
    cfg.dt = 1e-4;
    cfg.max_time = 5.0;
    Rng rng(3);
    const std::vector<Boundary> bounds = {Boundary::flat(-0.51, 0), Boundary::flat(0.0, 1)};
    const auto rec = first_passage(sys, cfg, State{-0.25, 0.0, 0.0}, bounds, rng);
    CHECK(rec.killed);
    CHECK(rec.ok);
}

TEST_CASE("first passage: hit_phi never precedes the start and accounting is exact") {
    const auto sys = build_melnikov_system(0.0, 1.0);
    SimConfig cfg;
    cfg.sigma = 0.3;
    cfg.dt = 3e-4;
    cfg.max_time = 3.0; // tight budget: some replicates get killed
    const std::vector<Boundary> bounds = {Boundary::flat(-0.4, 0), Boundary::flat(-0.1, 1)};
    const std::size_t n = 4000;
    auto batch = run_batch(n, 1234, 1, [&](std::size_t, Rng& rng) {
        return first_passage(sys, cfg, State{-0.25, 0.0, 0.0}, bounds, rng);
    });
    std::size_t hits = 0, killed = 0, forward = 0;
    for (const auto& r : batch.records) {
        REQUIRE(r.ok);
        if (r.killed)
            ++killed;
        else {
            ++hits;
            CHECK(r.hit_time > 0.0);
            if (r.hit_phi >= 0.0) ++forward;
        }
    }
    CHECK(hits + killed == n);
    // f_phi > 0 drives the phase forward; backward hits are noise excursions
    CHECK(static_cast<double>(forward) > 0.8 * static_cast<double>(hits));
}

TEST_CASE("halving dt moves the mean hit phase by less than one standard error") {
    const auto sys = build_melnikov_system(0.0, 1.0);
    const std::vector<Boundary> bounds = {Boundary::flat(-0.4, 0), Boundary::flat(-0.1, 1)};
    const std::size_t n = 10000;
    auto collect = [&](double dt) {
        SimConfig cfg;
        cfg.sigma = 0.1;
        cfg.dt = dt;
        cfg.max_time = 200.0;
        auto batch = run_batch(n, 777, 1, [&](std::size_t, Rng& rng) {
            return first_passage(sys, cfg, State{-0.25, 0.0, 0.0}, bounds, rng).hit_phi;
        });
        return batch.records;
    };
    const auto coarse = collect(2e-4);
    const auto fine = collect(1e-4);
    const double se = std::sqrt(variance(coarse) / static_cast<double>(n) +
                                variance(fine) / static_cast<double>(n));
    // common master seed makes the two estimates strongly correlated
    CHECK(std::abs(mean(coarse) - mean(fine)) < se);
}

TEST_CASE("EM first-passage law is stable under dt -> dt/2 near the unstable orbit") {
    const LinearOrbitSystem sys{two_pi, 1.0};
    const std::vector<Boundary> bounds = {Boundary::flat(0.1, +1), Boundary::flat(-0.1, -1)};
    auto harvest = [&](double dt, std::uint64_t seed) {
        SimConfig cfg;
        cfg.sigma = 0.05;
        cfg.dt = dt;
        cfg.max_time = 50.0;
        const std::size_t n = 20000;
        auto batch = run_batch(n, seed, 1, [&](std::size_t, Rng& rng) {
            return first_passage(sys, cfg, State{0.0, 0.0, 0.0}, bounds, rng).hit_time;
        });
        return batch.records;
    };
    const auto a = harvest(2e-4, 51);
    const auto b = harvest(1e-4, 52);
    CHECK(ks_test_two_sample(EmpiricalDistribution(a), EmpiricalDistribution(b)).pass_1pct);
}

TEST_CASE("run_batch: determinism, empty batch, seed independence") {
    const auto sys = build_melnikov_system(0.0, 1.0);
    SimConfig cfg;
    cfg.sigma = 0.25;
    cfg.dt = 5e-4;
    cfg.max_time = 100.0;
    const std::vector<Boundary> bounds = {Boundary::flat(-0.4, 0), Boundary::flat(-0.1, 1)};
    auto kernel = [&](std::size_t, Rng& rng) {
        return first_passage(sys, cfg, State{-0.25, 0.0, 0.0}, bounds, rng).hit_phi;
    };

    const auto serial = run_batch(2000, 31415, 1, kernel);
    const auto parallel = run_batch(2000, 31415, 8, kernel);
    REQUIRE(serial.records.size() == parallel.records.size());
    for (std::size_t i = 0; i < serial.records.size(); ++i)
        CHECK(serial.records[i] == parallel.records[i]); // bitwise identical

    CHECK(run_batch(0, 1, 4, kernel).records.empty());

    // two master seeds: same law (permutation test on the KS distance)
    const auto other = run_batch(2000, 271828, 1, kernel);
    CHECK(permutation_test_p(serial.records, other.records) > 0.01);
}

TEST_CASE("linear OU: exact variance, deterministic limit, reflection identity") {
    const LinearOu ou{1.3, 0.4};

    SECTION("time-changed variance") {
        const double t = 0.7;
        const std::size_t n = 100000;
        auto batch = run_batch(n, 5150, 1, [&](std::size_t, Rng& rng) {
            const auto path = linear_ou_path(ou, -0.2, {t}, rng);
            return path[0] * std::exp(-ou.lambda * t) + 0.2; // x~_t - x_0
        });
        const double expected = ou.variance_clock(t);
        const double se = expected * std::sqrt(2.0 / static_cast<double>(n));
        CHECK(std::abs(variance(batch.records) - expected) < 3.0 * se);
    }

    SECTION("sigma = 0 is the deterministic exponential") {
        const LinearOu det{0.8, 0.0};
        Rng rng(6);
        const auto path = linear_ou_path(det, -0.3, {0.5, 1.0, 2.0}, rng);
        CHECK(path[0] == Catch::Approx(-0.3 * std::exp(0.4)).margin(1e-14));
        CHECK(path[2] == Catch::Approx(-0.3 * std::exp(1.6)).margin(1e-14));
    }

    SECTION("P(tau_0 < infinity) from the reflection principle") {
        const LinearOu ou2{1.0, 0.3};
        const double x0 = -0.3;
        const double p = linear_ou_hit_zero_prob(ou2, x0);
        const std::size_t n = 100000;
        auto batch = run_batch(n, 616, 1, [&](std::size_t, Rng& rng) {
            const auto rec = linear_ou_exit(ou2, x0, -50.0, 0.0, 1e-3, 9.0, rng);
            return rec.hit && rec.side > 0 ? 1.0 : 0.0;
        });
        const double freq = mean(batch.records);
        const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
        CHECK(std::abs(freq - p) < 3.0 * se);
    }
}

TEST_CASE("linear OU symmetric exit splits 1/2 - 1/2") {
    const LinearOu ou{1.0, 0.1};
    const std::size_t n = 100000;
    auto batch = run_batch(n, 246, 1, [&](std::size_t, Rng& rng) {
        return linear_ou_exit(ou, 0.0, -1.0, 1.0, 1e-3, 60.0, rng).side > 0 ? 1.0 : 0.0;
    });
    const double se = 0.5 / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mean(batch.records) - 0.5) < 3.0 * se);
}

TEST_CASE("exact conditional hit-zero sampler agrees with brute-force conditioning") {
    // at sigma = 0.45 the conditioning is rare but simulable by rejection
    const LinearOu ou{1.0, 0.45};
    const double x0 = -0.5;

    std::vector<double> brute;
    {
        auto batch = run_batch(60000, 135, 1, [&](std::size_t, Rng& rng) {
            const auto rec = linear_ou_exit(ou, x0, -8.0, 0.0, 5e-4, 12.0, rng);
            return (rec.hit && rec.side > 0) ? rec.hit_time : -1.0;
        });
        for (double t : batch.records)
            if (t >= 0.0) brute.push_back(t);
    }
    REQUIRE(brute.size() > 2000);

    std::vector<double> exact(brute.size());
    Rng rng(7777);
    for (auto& t : exact) t = linear_ou_hit_zero_conditional(ou, x0, rng);

    CHECK(ks_test_two_sample(EmpiricalDistribution(brute), EmpiricalDistribution(exact))
              .pass_1pct);
}

TEST_CASE("slip detection with synthetic constant curves") {
    const auto sys = build_melnikov_system(0.0, 1.0);
    SimConfig cfg;
    cfg.sigma = 0.45;
    cfg.dt = 4.5e-4;
    cfg.max_time = 1e6;
    const PeriodicTable gm(std::vector<double>{-0.2});
    const PeriodicTable gp(std::vector<double>{0.2});
    Rng rng(97);
    const auto harvest = detect_slips(sys, cfg, gm, gp, 3000, rng);
    REQUIRE(harvest.slips.size() == 3000);
    CHECK_FALSE(harvest.budget_exhausted);

    for (const auto& s : harvest.slips) {
        REQUIRE(s.success);
        CHECK(s.t_minus < s.t_zero);   // defining order of the crossing events
        CHECK(s.t_zero < s.t_plus);
        CHECK(s.winding >= 0);
    }
    CHECK(harvest.attempts >= static_cast<long>(harvest.slips.size()));

    // winding tail is asymptotically geometric
    std::vector<long> winds;
    for (const auto& s : harvest.slips) winds.push_back(s.winding);
    const auto fit = asymp_geometric_tail_fit(winds);
    CHECK_FALSE(fit.flagged);
    CHECK(fit.p_hat > 0.0);
    CHECK(fit.p_hat < 1.0);
}

TEST_CASE("slip phases are ordered once sigma resolves the curve separation") {
    const auto sys = build_melnikov_system(0.0, 1.0);
    SimConfig cfg;
    cfg.sigma = 0.3;
    cfg.dt = 3e-4;
    cfg.max_time = 1e7;
    const PeriodicTable gm(std::vector<double>{-0.25});
    const PeriodicTable gp(std::vector<double>{0.25});
    Rng rng(555);
    const auto harvest = detect_slips(sys, cfg, gm, gp, 400, rng);
    REQUIRE(harvest.slips.size() == 400);
    std::size_t phi_ordered = 0;
    for (const auto& s : harvest.slips)
        if (s.phi_minus < s.phi_zero && s.phi_zero < s.phi_plus) ++phi_ordered;
    // the phases inherit the event order up to sigma-scale backward excursions
    CHECK(static_cast<double>(phi_ordered) > 0.75 * static_cast<double>(harvest.slips.size()));
}

TEST_CASE("escape frequency decays exponentially in 1/sigma^2") {
    const auto sys = build_melnikov_system(0.0, 1.0);
    const PeriodicTable gm(std::vector<double>{-0.2});
    const PeriodicTable gp(std::vector<double>{0.2});

    std::vector<double> inv_s2, log_freq;
    for (double sigma : {0.48, 0.42, 0.36}) {
        SimConfig cfg;
        cfg.sigma = sigma;
        cfg.dt = 5e-4 * sigma / 0.5;
        cfg.max_time = 1e6;
        Rng rng(404);
        const auto h = detect_slips(sys, cfg, gm, gp, 400, rng);
        // fraction of armed excursions that reach the unstable orbit
        const double frac = static_cast<double>(h.slips.size() + h.unsuccessful > 0
                                                    ? h.slips.size()
                                                    : 0) /
                            static_cast<double>(h.attempts);
        REQUIRE(frac > 0.0);
        inv_s2.push_back(1.0 / (sigma * sigma));
        log_freq.push_back(std::log(frac));
    }
    // linear regression R^2
    const double mx = mean(inv_s2), my = mean(log_freq);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < inv_s2.size(); ++i) {
        sxy += (inv_s2[i] - mx) * (log_freq[i] - my);
        sxx += (inv_s2[i] - mx) * (inv_s2[i] - mx);
        syy += (log_freq[i] - my) * (log_freq[i] - my);
    }
    const double r2 = sxy * sxy / (sxx * syy);
    CHECK(r2 > 0.95);
    CHECK(sxy < 0.0); // decaying
}
