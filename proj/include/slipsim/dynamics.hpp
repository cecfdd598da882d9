// Trajectory simulation: Euler-Maruyama stepping, first-passage detection
// against flat / scaled / tabulated boundaries, phase-slip detection, batched
// Monte Carlo with reproducible streams, and the exact sampler for the linear
// (explosive Ornstein-Uhlenbeck) system.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "slipsim/numerics.hpp"
#include "slipsim/orbit.hpp"
#include "slipsim/rng.hpp"
#include "slipsim/special.hpp"
#include "slipsim/systems.hpp"

namespace slipsim {

struct SimConfig {
    double sigma = 0.1;
    double dt = 1e-3;
    std::uint64_t seed = 0;
    double max_time = 1e6;
    double boundary_tol = 1e-9;

    // resolve the sigma-thick layer at the unstable orbit
    static double default_dt(const OrbitConstants& c, double sigma) {
        const double base = std::min({1e-3, 0.01 / c.lambda_plus, 0.01 * c.T_plus});
        return base * std::min(1.0, sigma);
    }

    void validate(const OrbitConstants& c) const {
        if (!(dt <= std::min(0.01 / c.lambda_plus, 0.01 * c.T_plus)))
            throw std::invalid_argument("SimConfig: dt too large for the orbit scales");
        if (!std::isfinite(max_time)) throw std::invalid_argument("SimConfig: max_time not finite");
    }
};

struct State {
    double r = 0.0;
    double phi = 0.0;
    double t = 0.0;
};

// one Euler-Maruyama step; strong order 1/2
template <PlanarSystem S>
inline void step_em(const S& sys, State& st, double dt, double sigma, double sqrt_dt, Rng& rng) {
    if constexpr (identity_noise_v<S>) {
        const double dr = sys.f_r(st.r, st.phi) * dt + sigma * sqrt_dt * rng.normal();
        const double dphi = sys.f_phi(st.r, st.phi) * dt + sigma * sqrt_dt * rng.normal();
        st.r += dr;
        st.phi += dphi;
    } else {
        std::array<double, S::noise_dim> xi;
        for (auto& v : xi) v = rng.normal();
        const auto gr = sys.g_row_r(st.r, st.phi);
        const auto gp = sys.g_row_phi(st.r, st.phi);
        double nr = 0.0, np = 0.0;
        for (int i = 0; i < S::noise_dim; ++i) {
            nr += gr[i] * xi[i];
            np += gp[i] * xi[i];
        }
        st.r += sys.f_r(st.r, st.phi) * dt + sigma * sqrt_dt * nr;
        st.phi += sys.f_phi(st.r, st.phi) * dt + sigma * sqrt_dt * np;
    }
    st.t += dt;
}

// ---------------------------------------------------------------------------
// Level curves r = b(phi) used as passage boundaries.
struct Boundary {
    enum class Kind { flat, scaled, table };

    Kind kind = Kind::flat;
    double level = 0.0;                  // flat: r = level; scaled: r = level * width(phi)
    const OrbitGeometry* geometry = nullptr;
    const PeriodicTable* curve = nullptr;
    int label = 0;

    static Boundary flat(double level, int label = 0) {
        Boundary b;
        b.kind = Kind::flat;
        b.level = level;
        b.label = label;
        return b;
    }
    // r = level * sqrt(2 lambda T h_per(phi))
    static Boundary scaled(double level, const OrbitGeometry& g, int label = 0) {
        Boundary b;
        b.kind = Kind::scaled;
        b.level = level;
        b.geometry = &g;
        b.label = label;
        return b;
    }
    static Boundary table(const PeriodicTable& t, int label = 0) {
        Boundary b;
        b.kind = Kind::table;
        b.curve = &t;
        b.label = label;
        return b;
    }

    double value(double phi) const {
        switch (kind) {
        case Kind::flat:
            return level;
        case Kind::scaled:
            return level * geometry->scaled_width(phi);
        case Kind::table:
            return (*curve)(phi);
        }
        return 0.0;
    }
};

struct FirstPassageRecord {
    double hit_phi = 0.0;
    double hit_time = 0.0;
    int which_boundary = -1;
    bool killed = false; // max_time reached without a crossing
    bool ok = true;      // false when the replicate aborted (non-finite state)
    std::string diagnostic;
};

// Integrate until one of the boundaries is crossed; the crossing is located
// by linear interpolation within the offending step.
template <PlanarSystem S>
FirstPassageRecord first_passage(const S& sys, const SimConfig& cfg, State start,
                                 const std::vector<Boundary>& boundaries, Rng& rng) {
    FirstPassageRecord rec;
    const double sqrt_dt = std::sqrt(cfg.dt);
    State st = start;

    std::vector<double> side(boundaries.size());
    for (std::size_t i = 0; i < boundaries.size(); ++i) {
        side[i] = st.r - boundaries[i].value(st.phi);
        if (side[i] == 0.0)
            throw std::invalid_argument("first_passage: start lies on a boundary");
    }

    while (st.t < cfg.max_time) {
        const State prev = st;
        step_em(sys, st, cfg.dt, cfg.sigma, sqrt_dt, rng);
        if (!std::isfinite(st.r) || !std::isfinite(st.phi)) {
            rec.ok = false;
            rec.diagnostic = "non-finite state at t = " + std::to_string(prev.t);
            return rec;
        }
        double best_frac = 2.0;
        int best = -1;
        for (std::size_t i = 0; i < boundaries.size(); ++i) {
            const double s_new = st.r - boundaries[i].value(st.phi);
            if (side[i] * s_new <= 0.0) {
                const double s_old = side[i];
                const double frac = s_old / (s_old - s_new); // in [0,1]
                if (frac < best_frac) {
                    best_frac = frac;
                    best = static_cast<int>(i);
                }
            }
            side[i] = s_new;
        }
        if (best >= 0) {
            rec.hit_phi = prev.phi + best_frac * (st.phi - prev.phi);
            rec.hit_time = prev.t + best_frac * cfg.dt;
            rec.which_boundary = boundaries[static_cast<std::size_t>(best)].label;
            return rec;
        }
    }
    rec.killed = true;
    rec.hit_time = st.t;
    rec.hit_phi = st.phi;
    return rec;
}

// ---------------------------------------------------------------------------
// Phase-slip detection between the curves Gamma^s_- and Gamma^s_+.
struct SlipRecord {
    double phi_minus = 0.0; // last crossing of Gamma^s_- before tau_0
    double phi_zero = 0.0;  // crossing of the unstable orbit
    double phi_plus = 0.0;  // first crossing of Gamma^s_+ after tau_0
    double t_minus = 0.0;   // the corresponding times, strictly ordered
    double t_zero = 0.0;
    double t_plus = 0.0;
    long winding = 0;       // whole periods spent near the stable orbit
    bool success = false;
};

struct SlipHarvest {
    std::vector<SlipRecord> slips; // successful ones
    long attempts = 0;             // excursions that armed
    long unsuccessful = 0;         // armed or passed excursions that fell back
    long downward = 0;             // slips through r = -1 instead
    long hard_kills = 0;           // |r + 1/2| > 2 domain truncation
    double total_time = 0.0;
    bool budget_exhausted = false;
};

// Collect n_slips successful phase slips starting from (r = -1/2, phi = 0).
// A slip is successful when the path crosses Gamma^s_- (last crossing
// recorded), hits r = 0 without returning to the stable orbit, and reaches
// Gamma^s_+ without returning to Gamma^s_-.
template <PlanarSystem S>
SlipHarvest detect_slips(const S& sys, const SimConfig& cfg, const PeriodicTable& gamma_minus,
                         const PeriodicTable& gamma_plus, std::size_t n_slips, Rng& rng) {
    SlipHarvest out;
    const double sqrt_dt = std::sqrt(cfg.dt);

    State st{-0.5, 0.0, 0.0};
    double anchor_phi = 0.0; // start of the current sojourn near the stable orbit

    enum class Mode { below, armed, passed };
    Mode mode = Mode::below;
    double phi_minus = std::numeric_limits<double>::quiet_NaN();
    double phi_zero = 0.0;
    double t_minus = 0.0, t_zero = 0.0;
    bool have_phi_minus = false;

    double prev_gm = st.r - gamma_minus(st.phi);
    double prev_zero = st.r - 0.0;
    double prev_gp = st.r - gamma_plus(st.phi);
    double prev_stable = 0.0; // distance to r=-1/2, minus 0 at start
    double prev_down = st.r + 1.0;

    auto reset_to_stable = [&](double at_phi) {
        st.r = -0.5;
        anchor_phi = at_phi;
        mode = Mode::below;
        have_phi_minus = false;
        prev_gm = st.r - gamma_minus(st.phi);
        prev_zero = st.r;
        prev_gp = st.r - gamma_plus(st.phi);
        prev_stable = 0.0;
        prev_down = st.r + 1.0;
    };

    while (out.slips.size() < n_slips && st.t < cfg.max_time) {
        const State prev = st;
        step_em(sys, st, cfg.dt, cfg.sigma, sqrt_dt, rng);
        if (!std::isfinite(st.r) || !std::isfinite(st.phi)) {
            ++out.hard_kills;
            reset_to_stable(prev.phi);
            continue;
        }
        // domain truncation: negligible mass, reported
        if (std::abs(st.r + 0.5) > 2.0) {
            ++out.hard_kills;
            reset_to_stable(st.phi);
            continue;
        }

        const double s_gm = st.r - gamma_minus(st.phi);
        const double s_zero = st.r;
        const double s_gp = st.r - gamma_plus(st.phi);
        const double s_stable = st.r + 0.5;
        const double s_down = st.r + 1.0;

        auto cross_phi = [&](double a, double b) {
            const double frac = a / (a - b);
            return prev.phi + frac * (st.phi - prev.phi);
        };
        auto cross_time = [&](double a, double b) {
            const double frac = a / (a - b);
            return prev.t + frac * cfg.dt;
        };

        switch (mode) {
        case Mode::below:
            if (prev_down > 0.0 && s_down <= 0.0) {
                // downward slip through r = -1: restart at the stable orbit
                ++out.downward;
                reset_to_stable(cross_phi(prev_down, s_down));
                continue;
            }
            if (prev_gm < 0.0 && s_gm >= 0.0) {
                phi_minus = cross_phi(prev_gm, s_gm);
                t_minus = cross_time(prev_gm, s_gm);
                have_phi_minus = true;
                mode = Mode::armed;
                ++out.attempts;
            }
            break;
        case Mode::armed:
            if (prev_stable > 0.0 && s_stable <= 0.0) {
                ++out.unsuccessful; // fell back to the stable orbit
                mode = Mode::below;
                have_phi_minus = false;
            } else if (prev_gm < 0.0 && s_gm >= 0.0) {
                phi_minus = cross_phi(prev_gm, s_gm); // later crossing supersedes
                t_minus = cross_time(prev_gm, s_gm);
                have_phi_minus = true;
            } else if (prev_zero < 0.0 && s_zero >= 0.0 && have_phi_minus) {
                phi_zero = cross_phi(prev_zero, s_zero);
                t_zero = cross_time(prev_zero, s_zero);
                mode = Mode::passed;
            }
            break;
        case Mode::passed:
            if (prev_gm > 0.0 && s_gm <= 0.0) {
                ++out.unsuccessful; // returned to Gamma^s_- after tau_0
                mode = Mode::armed;
                have_phi_minus = false;
            } else if (prev_gp < 0.0 && s_gp >= 0.0) {
                SlipRecord rec;
                rec.phi_minus = phi_minus;
                rec.phi_zero = phi_zero;
                rec.phi_plus = cross_phi(prev_gp, s_gp);
                rec.t_minus = t_minus;
                rec.t_zero = t_zero;
                rec.t_plus = cross_time(prev_gp, s_gp);
                rec.winding = static_cast<long>(std::floor(phi_zero - anchor_phi + 0.5));
                rec.success = true;
                out.slips.push_back(rec);
                // continue from the translated stable orbit
                st.r -= 1.0;
                anchor_phi = rec.phi_plus;
                mode = Mode::below;
                have_phi_minus = false;
                prev_gm = st.r - gamma_minus(st.phi);
                prev_zero = st.r;
                prev_gp = st.r - gamma_plus(st.phi);
                prev_stable = st.r + 0.5;
                prev_down = st.r + 1.0;
                continue;
            }
            break;
        }

        prev_gm = s_gm;
        prev_zero = s_zero;
        prev_gp = s_gp;
        prev_stable = s_stable;
        prev_down = s_down;
    }
    out.total_time = st.t;
    out.budget_exhausted = out.slips.size() < n_slips;
    return out;
}

// ---------------------------------------------------------------------------
// Batched Monte Carlo.  Results depend only on (master_seed, replicate index);
// the worker count changes scheduling, never output.
template <class T>
struct BatchResult {
    std::vector<T> records;               // index order, failed slots removed
    std::vector<std::size_t> failed;      // indices of failed replicates
    std::size_t n_replicates = 0;
};

template <class Kernel>
auto run_batch(std::size_t n, std::uint64_t master_seed, unsigned n_workers, Kernel kernel)
    -> BatchResult<decltype(kernel(std::size_t{0}, std::declval<Rng&>()))> {
    using T = decltype(kernel(std::size_t{0}, std::declval<Rng&>()));
    std::vector<std::optional<T>> slots(n);
    if (n_workers == 0) n_workers = std::max(1u, std::thread::hardware_concurrency());
    n_workers = static_cast<unsigned>(std::min<std::size_t>(n_workers, std::max<std::size_t>(n, 1)));

    auto work = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            Rng rng = replicate_stream(master_seed, i);
            try {
                slots[i] = kernel(i, rng);
            } catch (...) {
                slots[i] = std::nullopt;
            }
        }
    };

    if (n_workers <= 1) {
        work(0, n);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + n_workers - 1) / n_workers;
        for (unsigned w = 0; w < n_workers; ++w) {
            const std::size_t lo = w * chunk;
            const std::size_t hi = std::min(n, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(work, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    BatchResult<T> out;
    out.n_replicates = n;
    out.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (slots[i])
            out.records.push_back(*slots[i]);
        else
            out.failed.push_back(i);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Exact sampling for the linear system dx = lambda x dt + sigma dW:
//   x_t = e^{lambda t} (x_0 + W~_{v(t)}),  v(t) = sigma^2 (1 - e^{-2 lambda t}) / (2 lambda).

struct LinearOu {
    double lambda = 1.0;
    double sigma = 0.1;

    double variance_clock(double t) const {
        return sigma * sigma * (1.0 - std::exp(-2.0 * lambda * t)) / (2.0 * lambda);
    }
    double variance_clock_inf() const { return sigma * sigma / (2.0 * lambda); }
    // inverse of the clock; vc must be < variance_clock_inf
    double clock_inverse(double vc) const {
        return -0.5 * std::log(1.0 - 2.0 * lambda * vc / (sigma * sigma)) / lambda;
    }
};

// path sample on a given time grid: exact Gaussian increments of the
// time-changed Brownian motion, no discretization bias
inline std::vector<double> linear_ou_path(const LinearOu& ou, double x0,
                                          const std::vector<double>& t_grid, Rng& rng) {
    std::vector<double> x(t_grid.size());
    double xt = x0;
    double v_prev = 0.0;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const double v = ou.variance_clock(t_grid[i]);
        const double dv = v - v_prev;
        if (dv > 0.0) xt += std::sqrt(dv) * rng.normal();
        v_prev = v;
        x[i] = std::exp(ou.lambda * t_grid[i]) * xt;
    }
    return x;
}

struct OuExitRecord {
    double hit_time = 0.0;
    int side = 0;    // +1 exited at b, -1 at a
    bool hit = false;
};

// First exit from (a, b) starting at x0, fine grid with Brownian-bridge
// refinement of within-step crossings of the moving boundaries in the
// time-changed coordinates.
inline OuExitRecord linear_ou_exit(const LinearOu& ou, double x0, double a, double b, double dt,
                                   double t_max, Rng& rng) {
    OuExitRecord rec;
    double t = 0.0;
    double xt = x0; // time-changed coordinate x~
    double v_prev = 0.0;
    while (t < t_max) {
        const double t_next = t + dt;
        const double v = ou.variance_clock(t_next);
        const double dv = v - v_prev;
        const double x_prev = xt;
        xt += (dv > 0.0 ? std::sqrt(dv) * rng.normal() : 0.0);

        const double scale_prev = std::exp(ou.lambda * t);
        const double scale = std::exp(ou.lambda * t_next);
        const double x_real_prev = scale_prev * x_prev;
        const double x_real = scale * xt;

        if (x_real >= b || x_real <= a) {
            const double target = x_real >= b ? b : a;
            const double denom = x_real - x_real_prev;
            const double frac = denom != 0.0 ? (target - x_real_prev) / denom : 1.0;
            rec.hit_time = t + std::clamp(frac, 0.0, 1.0) * dt;
            rec.side = x_real >= b ? +1 : -1;
            rec.hit = true;
            return rec;
        }
        if (dv > 0.0) {
            // bridge crossing of the endpoint-averaged levels in x~ space
            const double ub = 0.5 * (b / scale_prev + b / scale);
            const double lb = 0.5 * (a / scale_prev + a / scale);
            const double p_up = std::exp(-2.0 * (ub - x_prev) * (ub - xt) / dv);
            const double p_dn = std::exp(-2.0 * (x_prev - lb) * (xt - lb) / dv);
            const double u = rng.uniform();
            if (u < p_up || u < p_dn) {
                rec.hit_time = t + 0.5 * dt;
                rec.side = (p_up >= p_dn) ? +1 : -1;
                rec.hit = true;
                return rec;
            }
        }
        v_prev = v;
        t = t_next;
    }
    rec.hit_time = t;
    return rec;
}

// Exact sample of tau_0 conditioned on {tau_0 < infinity} for x0 < 0:
// tau_0 = clock^{-1}(x0^2 / Z^2) with |Z| a standard normal conditioned on
// |Z| >= |x0| sqrt(2 lambda) / sigma (reflection principle).
inline double linear_ou_hit_zero_conditional(const LinearOu& ou, double x0, Rng& rng) {
    if (!(x0 < 0.0)) throw std::invalid_argument("hit_zero sampler expects x0 < 0");
    const double c = std::abs(x0) * std::sqrt(2.0 * ou.lambda) / ou.sigma;
    const double z = normal_tail(rng, c);
    const double t_bm = x0 * x0 / (z * z);
    return ou.clock_inverse(t_bm);
}

// P(tau_0 < infinity) for x0 < 0 (reflection principle, exact)
inline double linear_ou_hit_zero_prob(const LinearOu& ou, double x0) {
    return 2.0 * normal_tail_prob(std::abs(x0) * std::sqrt(2.0 * ou.lambda) / ou.sigma);
}

} // namespace slipsim
