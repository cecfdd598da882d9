// Monte Carlo estimation of the random Poincare map kernel on the radial
// interval (-1, 0), its principal eigenvalue and quasistationary
// distribution, and the survival cross-checks against direct simulation.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "slipsim/dynamics.hpp"
#include "slipsim/laws.hpp"
#include "slipsim/rng.hpp"
#include "slipsim/stats.hpp"
#include "slipsim/systems.hpp"

namespace slipsim {

struct KernelEstimate {
    int m = 0;                               // cells on (-1, 0)
    std::vector<std::vector<double>> matrix; // row-substochastic transitions
    std::vector<double> kill;                // per-cell kill probability
    std::vector<long> counts;                // per-cell sample sizes
    bool kill_rate_excessive = false;        // kill > 0.999 somewhere

    double cell_mid(int i) const { return -1.0 + (i + 0.5) / m; }
    int cell_of(double r) const {
        int k = static_cast<int>((r + 1.0) * m);
        // landings outside (-1, 0) are clamped to the boundary cells
        if (k < 0) k = 0;
        if (k >= m) k = m - 1;
        return k;
    }
};

namespace detail {

// one period of the chain: from (r0, phi = 0) until phi = 1, killed when the
// path hits either neighbouring unstable orbit (r = 0 or r = -1) on the way
template <PlanarSystem S>
std::optional<double> kernel_step(const S& sys, double r0, double sigma, double dt, Rng& rng) {
    State st{r0, 0.0, 0.0};
    const double sqrt_dt = std::sqrt(dt);
    while (true) {
        const State prev = st;
        step_em(sys, st, dt, sigma, sqrt_dt, rng);
        if (st.r >= 0.0 || st.r <= -1.0) return std::nullopt;
        if (st.phi >= 1.0) {
            const double w = (1.0 - prev.phi) / (st.phi - prev.phi);
            return prev.r + w * (st.r - prev.r);
        }
    }
}

} // namespace detail

template <PlanarSystem S>
KernelEstimate estimate_kernel(const S& sys, const OrbitConstants& c, double sigma, int m,
                               long n_per_cell, std::uint64_t master_seed,
                               unsigned n_workers = 1) {
    if (n_per_cell < 10) throw std::invalid_argument("estimate_kernel: n_per_cell too small");
    KernelEstimate est;
    est.m = m;
    est.matrix.assign(static_cast<std::size_t>(m),
                      std::vector<double>(static_cast<std::size_t>(m), 0.0));
    est.kill.assign(static_cast<std::size_t>(m), 0.0);
    est.counts.assign(static_cast<std::size_t>(m), n_per_cell);

    const double dt = SimConfig::default_dt(c, sigma);

    struct RowSample {
        int cell = -1; // -1: killed
    };
    for (int i = 0; i < m; ++i) {
        const double r0 = est.cell_mid(i);
        auto batch = run_batch(
            static_cast<std::size_t>(n_per_cell),
            master_seed + static_cast<std::uint64_t>(i) * 0x9E3779B9ULL, n_workers,
            [&](std::size_t, Rng& rng) {
                RowSample s;
                const auto landing = detail::kernel_step(sys, r0, sigma, dt, rng);
                s.cell = landing ? est.cell_of(*landing) : -1;
                return s;
            });
        long killed = 0;
        for (const auto& s : batch.records) {
            if (s.cell < 0)
                ++killed;
            else
                est.matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(s.cell)] += 1.0;
        }
        const double denom = static_cast<double>(batch.records.size());
        for (auto& v : est.matrix[static_cast<std::size_t>(i)]) v /= denom;
        est.kill[static_cast<std::size_t>(i)] = static_cast<double>(killed) / denom;
        est.counts[static_cast<std::size_t>(i)] = static_cast<long>(batch.records.size());
        if (est.kill[static_cast<std::size_t>(i)] > 0.999) est.kill_rate_excessive = true;
    }
    return est;
}

// ---------------------------------------------------------------------------
struct SpectralEstimate {
    double lambda0 = 0.0;
    std::vector<double> pi0; // quasistationary distribution (left eigenvector)
    std::vector<double> psi; // right eigenfunction
    long iterations = 0;
    double residual = 0.0;
    bool gap_warning = false; // power iteration failed to converge
};

inline SpectralEstimate principal_eigen(const std::vector<std::vector<double>>& matrix,
                                        double tol = 1e-10, long max_iter = 100000,
                                        const std::vector<double>* init = nullptr) {
    const std::size_t m = matrix.size();
    SpectralEstimate est;
    std::vector<double> pi(m, 1.0 / static_cast<double>(m));
    if (init && init->size() == m) pi = *init;
    std::vector<double> next(m, 0.0);
    double lambda = 0.0;
    long it = 0;
    double res = 1.0;
    for (; it < max_iter; ++it) {
        // left iteration: next = pi^T M
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const double w = pi[i];
            if (w == 0.0) continue;
            const auto& row = matrix[i];
            for (std::size_t j = 0; j < m; ++j) next[j] += w * row[j];
        }
        double sum = 0.0;
        for (double v : next) sum += v;
        if (sum <= 0.0) throw std::runtime_error("principal_eigen: mass vanished");
        lambda = sum;
        res = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            next[j] /= sum;
            res += std::abs(next[j] - pi[j]);
        }
        pi.swap(next);
        if (res < tol) break;
    }
    est.lambda0 = lambda;
    est.pi0 = pi;
    est.iterations = it;
    est.residual = res;
    est.gap_warning = res >= tol;

    // right eigenfunction by the transpose iteration
    std::vector<double> psi(m, 1.0);
    for (long k = 0; k < 2000; ++k) {
        std::vector<double> nx(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const auto& row = matrix[i];
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) acc += row[j] * psi[j];
            nx[i] = acc;
        }
        double norm = 0.0;
        for (double v : nx) norm += std::abs(v);
        if (norm <= 0.0) break;
        double diff = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            nx[i] /= norm;
            diff += std::abs(nx[i] - psi[i]);
        }
        psi.swap(nx);
        if (diff < tol) break;
    }
    est.psi = psi;
    return est;
}

inline SpectralEstimate principal_eigen(const KernelEstimate& k, double tol = 1e-10) {
    return principal_eigen(k.matrix, tol);
}

// parametric bootstrap of lambda0: multinomial resampling of each row
inline LocationFit bootstrap_lambda0(const KernelEstimate& est, int n_boot = 200,
                                     std::uint64_t seed = 4242) {
    const int m = est.m;
    Rng rng(seed);
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(n_boot));
    std::vector<std::vector<double>> mat(static_cast<std::size_t>(m),
                                         std::vector<double>(static_cast<std::size_t>(m)));
    for (int b = 0; b < n_boot; ++b) {
        for (int i = 0; i < m; ++i) {
            auto& row = mat[static_cast<std::size_t>(i)];
            std::fill(row.begin(), row.end(), 0.0);
            const long n = est.counts[static_cast<std::size_t>(i)];
            // sample n outcomes from the estimated row law by inverse CDF
            for (long k = 0; k < n; ++k) {
                double u = rng.uniform();
                double acc = 0.0;
                int landed = -1;
                for (int j = 0; j < m; ++j) {
                    acc += est.matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                    if (u < acc) {
                        landed = j;
                        break;
                    }
                }
                if (landed >= 0) row[static_cast<std::size_t>(landed)] += 1.0;
            }
            for (auto& v : row) v /= static_cast<double>(n);
        }
        vals.push_back(principal_eigen(mat, 1e-9, 20000).lambda0);
    }
    std::sort(vals.begin(), vals.end());
    LocationFit fit;
    fit.location = principal_eigen(est).lambda0;
    fit.ci_lo = vals[static_cast<std::size_t>(0.025 * n_boot)];
    fit.ci_hi = vals[static_cast<std::size_t>(std::min(n_boot - 1.0, 0.975 * n_boot))];
    return fit;
}

// ---------------------------------------------------------------------------
// Direct-simulation survival statistics for the cross-checks.
struct CrossingSample {
    double phi_hit = 0.0;
    long periods = 0; // completed periods before the hit
    bool upward = false;
};

template <PlanarSystem S>
std::vector<CrossingSample> harvest_crossings(const S& sys, const OrbitConstants& c,
                                              double sigma, std::size_t n,
                                              std::uint64_t master_seed, unsigned n_workers = 1,
                                              double max_time = 1e7) {
    SimConfig cfg;
    cfg.sigma = sigma;
    cfg.dt = SimConfig::default_dt(c, sigma);
    cfg.max_time = max_time;
    const std::vector<Boundary> bounds = {Boundary::flat(0.0, +1), Boundary::flat(-1.0, -1)};
    auto batch = run_batch(n, master_seed, n_workers, [&](std::size_t, Rng& rng) {
        const auto rec = first_passage(sys, cfg, State{-0.5, 0.0, 0.0}, bounds, rng);
        CrossingSample s;
        s.phi_hit = rec.hit_phi;
        s.periods = static_cast<long>(std::floor(rec.hit_phi));
        s.upward = rec.which_boundary > 0;
        if (rec.killed || !rec.ok) s.periods = -1;
        return s;
    });
    std::vector<CrossingSample> out;
    out.reserve(batch.records.size());
    for (const auto& s : batch.records)
        if (s.periods >= 0) out.push_back(s);
    return out;
}

// conditional radial state after n_periods, for the quasistationary check
template <PlanarSystem S>
std::vector<double> harvest_period_state(const S& sys, const OrbitConstants& c, double sigma,
                                         int n_periods, std::size_t n,
                                         std::uint64_t master_seed, unsigned n_workers = 1) {
    SimConfig cfg;
    cfg.sigma = sigma;
    cfg.dt = SimConfig::default_dt(c, sigma);
    struct Out {
        double r = 0.0;
        bool alive = false;
    };
    const double sqrt_dt = std::sqrt(cfg.dt);
    auto batch = run_batch(n, master_seed, n_workers, [&](std::size_t, Rng& rng) {
        State st{-0.5, 0.0, 0.0};
        Out o;
        while (st.phi < n_periods) {
            const State prev = st;
            step_em(sys, st, cfg.dt, cfg.sigma, sqrt_dt, rng);
            if (st.r >= 0.0 || st.r <= -1.0) return o;
            if (st.phi >= n_periods) {
                const double w = (n_periods - prev.phi) / (st.phi - prev.phi);
                o.r = prev.r + w * (st.r - prev.r);
                o.alive = true;
            }
        }
        return o;
    });
    std::vector<double> out;
    for (const auto& o : batch.records)
        if (o.alive) out.push_back(o.r);
    return out;
}

} // namespace slipsim
