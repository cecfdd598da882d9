// Large-deviation machinery: the Freidlin-Wentzell rate function, the
// Hamiltonian lift, instanton computation by shooting between the stable and
// unstable orbits, quasipotential values on the unstable orbit, and the
// Gamma^s curves obtained by flowing the scaled neighbourhood boundaries.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "slipsim/numerics.hpp"
#include "slipsim/orbit.hpp"
#include "slipsim/systems.hpp"

namespace slipsim {

// ---------------------------------------------------------------------------
// Rate function  I = (1/2) int (gdot - f)^T D^{-1} (gdot - f) dt  for a
// time-parametrized sampled path; velocities by central differences.
struct PathPoint {
    double t = 0.0;
    double r = 0.0;
    double phi = 0.0;
};

template <PlanarSystem S>
double rate_function(const std::vector<PathPoint>& path, const S& sys) {
    const std::size_t n = path.size();
    if (n < 3) throw std::invalid_argument("rate_function: need at least 3 samples");

    auto integrand = [&](std::size_t i, double vr, double vphi) {
        const double r = path[i].r, phi = path[i].phi;
        const double a = diffusion_rr(sys, r, phi);
        const double b = diffusion_rphi(sys, r, phi);
        const double c = diffusion_phiphi(sys, r, phi);
        const double det = a * c - b * b;
        if (!(det > 1e-14)) throw std::domain_error("rate_function: singular diffusion matrix");
        const double ur = vr - sys.f_r(r, phi);
        const double up = vphi - sys.f_phi(r, phi);
        // D^{-1} = [c, -b; -b, a] / det
        return 0.5 * (c * ur * ur - 2.0 * b * ur * up + a * up * up) / det;
    };

    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t i0 = (i == 0) ? 0 : i - 1;
        std::size_t i1 = (i + 1 == n) ? n - 1 : i + 1;
        const double dt = path[i1].t - path[i0].t;
        const double vr = (path[i1].r - path[i0].r) / dt;
        const double vphi = (path[i1].phi - path[i0].phi) / dt;
        g[i] = integrand(i, vr, vphi);
    }
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
        total += 0.5 * (g[i] + g[i + 1]) * (path[i + 1].t - path[i].t);
    return total;
}

// ---------------------------------------------------------------------------
// Hamiltonian  H(x, p) = (1/2) p^T D(x) p + f(x)^T p  and its flow.
template <PlanarSystem S>
double hamiltonian(const S& sys, double r, double phi, double p_r, double p_phi) {
    const double a = diffusion_rr(sys, r, phi);
    const double b = diffusion_rphi(sys, r, phi);
    const double c = diffusion_phiphi(sys, r, phi);
    return 0.5 * (a * p_r * p_r + 2.0 * b * p_r * p_phi + c * p_phi * p_phi) +
           sys.f_r(r, phi) * p_r + sys.f_phi(r, phi) * p_phi;
}

// (dr, dphi, dp_r, dp_phi)/dt
template <PlanarSystem S>
std::array<double, 4> ham_vector_field(const S& sys, const std::array<double, 4>& z) {
    const double r = z[0], phi = z[1], p_r = z[2], p_phi = z[3];
    constexpr bool const_noise = identity_noise_v<S>;

    const double a = diffusion_rr(sys, r, phi);
    const double b = diffusion_rphi(sys, r, phi);
    const double c = diffusion_phiphi(sys, r, phi);

    std::array<double, 4> dz{};
    dz[0] = a * p_r + b * p_phi + sys.f_r(r, phi);
    dz[1] = b * p_r + c * p_phi + sys.f_phi(r, phi);

    double h_r = dfr_dr(sys, r, phi) * p_r + dfphi_dr(sys, r, phi) * p_phi;
    double h_phi = dfr_dphi(sys, r, phi) * p_r + dfphi_dphi(sys, r, phi) * p_phi;
    if constexpr (!const_noise) {
        auto quad = [&](double rr, double pp) {
            const double aa = diffusion_rr(sys, rr, pp);
            const double bb = diffusion_rphi(sys, rr, pp);
            const double cc = diffusion_phiphi(sys, rr, pp);
            return 0.5 * (aa * p_r * p_r + 2.0 * bb * p_r * p_phi + cc * p_phi * p_phi);
        };
        h_r += central_diff([&](double x) { return quad(x, phi); }, r, fd_step);
        h_phi += central_diff([&](double x) { return quad(r, x); }, phi, fd_step);
    }
    dz[2] = -h_r;
    dz[3] = -h_phi;
    return dz;
}

template <PlanarSystem S>
void rk4_hamiltonian_step(const S& sys, std::array<double, 4>& z, double dt) {
    const auto k1 = ham_vector_field(sys, z);
    std::array<double, 4> z2;
    for (int i = 0; i < 4; ++i) z2[i] = z[i] + 0.5 * dt * k1[i];
    const auto k2 = ham_vector_field(sys, z2);
    for (int i = 0; i < 4; ++i) z2[i] = z[i] + 0.5 * dt * k2[i];
    const auto k3 = ham_vector_field(sys, z2);
    for (int i = 0; i < 4; ++i) z2[i] = z[i] + dt * k3[i];
    const auto k4 = ham_vector_field(sys, z2);
    for (int i = 0; i < 4; ++i)
        z[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

// ---------------------------------------------------------------------------
// Reduced flow on {H = 0} with phi as the time variable: p_phi is slaved to
// (r, p_r, phi) through the zero-energy constraint (root vanishing with p_r).
namespace detail {

template <PlanarSystem S>
double p_phi_on_shell(const S& sys, double r, double phi, double p_r, bool* ok = nullptr) {
    const double a = diffusion_rr(sys, r, phi);
    const double b = diffusion_rphi(sys, r, phi);
    const double c = diffusion_phiphi(sys, r, phi);
    const double A = 0.5 * c;
    const double B = b * p_r + sys.f_phi(r, phi);
    const double C = 0.5 * a * p_r * p_r + sys.f_r(r, phi) * p_r;
    const double disc = B * B - 4.0 * A * C;
    if (disc < 0.0) {
        if (ok) *ok = false;
        return 0.0;
    }
    if (ok) *ok = true;
    // root that vanishes with C (Citardauq form, stable for small C)
    return -2.0 * C / (B + std::sqrt(disc));
}

struct ReducedState {
    double r = 0.0;
    double p_r = 0.0;
    double t = 0.0;      // physical time
    double action = 0.0; // accumulated int p . dgamma
};

// d/dphi of (r, p_r, t, action); returns false outside the zero-energy cone
template <PlanarSystem S>
bool reduced_rhs(const S& sys, double phi, const ReducedState& s, std::array<double, 4>& d) {
    bool ok = true;
    const double p_phi = p_phi_on_shell(sys, s.r, phi, s.p_r, &ok);
    if (!ok) return false;
    const double a = diffusion_rr(sys, s.r, phi);
    const double b = diffusion_rphi(sys, s.r, phi);
    const double c = diffusion_phiphi(sys, s.r, phi);

    const double phi_dot = b * s.p_r + c * p_phi + sys.f_phi(s.r, phi);
    if (!(phi_dot > 1e-6)) return false;
    const double r_dot = a * s.p_r + b * p_phi + sys.f_r(s.r, phi);

    double h_r = dfr_dr(sys, s.r, phi) * s.p_r + dfphi_dr(sys, s.r, phi) * p_phi;
    constexpr bool const_noise = identity_noise_v<S>;
    if constexpr (!const_noise) {
        h_r += central_diff(
            [&](double x) {
                const double aa = diffusion_rr(sys, x, phi);
                const double bb = diffusion_rphi(sys, x, phi);
                const double cc = diffusion_phiphi(sys, x, phi);
                return 0.5 * (aa * s.p_r * s.p_r + 2.0 * bb * s.p_r * p_phi +
                              cc * p_phi * p_phi);
            },
            s.r, fd_step);
    }

    d[0] = r_dot / phi_dot;          // dr/dphi
    d[1] = -h_r / phi_dot;           // dp_r/dphi
    d[2] = 1.0 / phi_dot;            // dt/dphi
    d[3] = s.p_r * d[0] + p_phi;     // dI/dphi
    return true;
}

template <PlanarSystem S>
bool reduced_rk4_step(const S& sys, double& phi, ReducedState& s, double dphi) {
    std::array<double, 4> k1{}, k2{}, k3{}, k4{};
    ReducedState tmp = s;
    if (!reduced_rhs(sys, phi, s, k1)) return false;
    tmp.r = s.r + 0.5 * dphi * k1[0];
    tmp.p_r = s.p_r + 0.5 * dphi * k1[1];
    if (!reduced_rhs(sys, phi + 0.5 * dphi, tmp, k2)) return false;
    tmp.r = s.r + 0.5 * dphi * k2[0];
    tmp.p_r = s.p_r + 0.5 * dphi * k2[1];
    if (!reduced_rhs(sys, phi + 0.5 * dphi, tmp, k3)) return false;
    tmp.r = s.r + dphi * k3[0];
    tmp.p_r = s.p_r + dphi * k3[1];
    if (!reduced_rhs(sys, phi + dphi, tmp, k4)) return false;
    s.r += dphi / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
    s.p_r += dphi / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    s.t += dphi / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]);
    s.action += dphi / 6.0 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]);
    phi += dphi;
    return true;
}

// Linearized reduced flow at the orbit r = r0 (p = 0):
//   d(dr, dp)/dphi = (1/f_phi) [[d_r f_r, D_rr], [0, -d_r f_r]] (dr, dp).
// Monodromy over [phi0, phi0+1] is upper triangular; the fiber slope of the
// non-deterministic eigendirection is (m22 - m11) / m12.
template <PlanarSystem S>
double fiber_slope(const S& sys, double r0, double phi0, int steps = 512) {
    double m11 = 1.0, m12 = 0.0, m22 = 1.0;
    const double h = 1.0 / steps;
    auto a_entries = [&](double phi, double& a11, double& a12) {
        const double fphi = sys.f_phi(r0, phi);
        a11 = dfr_dr(sys, r0, phi) / fphi;
        a12 = diffusion_rr(sys, r0, phi) / fphi;
    };
    // RK4 on the triangular variational system
    for (int i = 0; i < steps; ++i) {
        const double phi = phi0 + i * h;
        auto rhs = [&](double p, double x11, double x12, double x22, std::array<double, 3>& d) {
            double a11, a12;
            a_entries(p, a11, a12);
            d[0] = a11 * x11;
            d[1] = a11 * x12 + a12 * x22;
            d[2] = -a11 * x22;
        };
        std::array<double, 3> k1{}, k2{}, k3{}, k4{};
        rhs(phi, m11, m12, m22, k1);
        rhs(phi + 0.5 * h, m11 + 0.5 * h * k1[0], m12 + 0.5 * h * k1[1], m22 + 0.5 * h * k1[2],
            k2);
        rhs(phi + 0.5 * h, m11 + 0.5 * h * k2[0], m12 + 0.5 * h * k2[1], m22 + 0.5 * h * k2[2],
            k3);
        rhs(phi + h, m11 + h * k3[0], m12 + h * k3[1], m22 + h * k3[2], k4);
        m11 += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
        m12 += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
        m22 += h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]);
    }
    if (std::abs(m12) < 1e-300)
        throw std::runtime_error("fiber_slope: degenerate monodromy");
    return (m22 - m11) / m12;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Instanton path between the stable orbit r = -1/2 and the unstable orbit
// r = 0, with momenta and accumulated action.
struct InstantonSample {
    double phi = 0.0;
    double r = 0.0;
    double p_r = 0.0;
    double p_phi = 0.0;
    double t = 0.0;
    double action = 0.0;
};

struct InstantonPath {
    std::vector<InstantonSample> samples;
    double action = 0.0;    // I_infinity including the analytic end corrections
    double phi0 = 0.0;      // starting slice of the shooting
    bool degenerate = false; // miss function flat: manifolds coincide (eps = 0)
    double miss_residual = 0.0;

    // crossing phase (mod 1) where the path last crosses r = -delta
    double s_star(double delta) const {
        const double target = -delta;
        for (std::size_t i = samples.size(); i-- > 1;) {
            if (samples[i - 1].r <= target && samples[i].r >= target) {
                const double w =
                    (target - samples[i - 1].r) / (samples[i].r - samples[i - 1].r);
                return fractional_part(samples[i - 1].phi +
                                       w * (samples[i].phi - samples[i - 1].phi));
            }
        }
        throw std::domain_error("instanton does not cross the requested level");
    }

    std::vector<PathPoint> as_path() const {
        std::vector<PathPoint> p(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i)
            p[i] = {samples[i].t, samples[i].r, samples[i].phi};
        return p;
    }
};

struct ShootingOptions {
    double delta_init = 1e-4; // offset along the unstable fiber of the stable orbit
    double r_section = -0.02; // miss function measured on this level
    double delta_tail = 1e-4; // integration stops at r = -delta_tail
    double dphi = 1e-3;       // RK4 step in phi
    double phi_budget = 80.0;
    int scan_points = 33;
    double degenerate_tol = 1e-6;
    double bisect_tol = 1e-8;
};

namespace detail {

// outcome of one shot: miss = p_r - l_-(phi) r at the section, or a sentinel
// sign for trajectories that never reach it
template <PlanarSystem S>
double shoot_miss(const S& sys, const ShootingOptions& opt, double lp_slope,
                  const std::vector<double>& lm_table, double phi0) {
    ReducedState st;
    st.r = -0.5 + opt.delta_init;
    st.p_r = opt.delta_init * lp_slope;
    double phi = phi0;
    const double phi_end = phi0 + opt.phi_budget;
    double prev_r = st.r, prev_p = st.p_r, prev_phi = phi;
    while (phi < phi_end) {
        prev_r = st.r;
        prev_p = st.p_r;
        prev_phi = phi;
        if (!reduced_rk4_step(sys, phi, st, opt.dphi))
            return st.p_r > 0.0 ? 1.0 : -1.0; // left the zero-energy cone
        if (st.r < -0.6) return -1.0;         // fell back past the stable orbit
        if (st.r >= opt.r_section) {
            const double w = (opt.r_section - prev_r) / (st.r - prev_r);
            const double phic = prev_phi + w * (phi - prev_phi);
            const double pc = prev_p + w * (st.p_r - prev_p);
            const std::size_t n = lm_table.size();
            const double x = fractional_part(phic) * n;
            std::size_t i = std::min(static_cast<std::size_t>(x), n - 1);
            const double frac = x - i;
            const double lm =
                lm_table[i] * (1.0 - frac) + lm_table[(i + 1) % n] * frac;
            return pc - lm * opt.r_section;
        }
    }
    return 0.0; // still tracking the manifold when the budget ran out
}

} // namespace detail

// Shooting method: start on the linearized unstable fiber of the stable
// orbit at distance delta_init, integrate the zero-energy reduced flow, and
// move the starting slice phi0 within one period until the trajectory lands
// on the stable manifold of the unstable orbit.
template <PlanarSystem S>
InstantonPath find_instanton(const S& sys, const OrbitConstants& c,
                             ShootingOptions opt = {}) {
    // fiber slopes: expanding at the stable orbit (per slice), contracting at
    // the unstable orbit (table over the crossing phase)
    const int n_slice = 64;
    std::vector<double> lp(n_slice), lm(n_slice);
    for (int i = 0; i < n_slice; ++i) {
        lp[static_cast<std::size_t>(i)] = detail::fiber_slope(sys, -0.5, i / double(n_slice));
        lm[static_cast<std::size_t>(i)] = detail::fiber_slope(sys, 0.0, i / double(n_slice));
    }
    auto lp_at = [&](double phi0) {
        const double x = fractional_part(phi0) * n_slice;
        const int i = std::min(static_cast<int>(x), n_slice - 1);
        const double w = x - i;
        return lp[static_cast<std::size_t>(i)] * (1.0 - w) +
               lp[static_cast<std::size_t>((i + 1) % n_slice)] * w;
    };

    auto miss = [&](double phi0) {
        return detail::shoot_miss(sys, opt, lp_at(phi0), lm, phi0);
    };

    // scan the fundamental domain of starting slices
    std::vector<double> phis(static_cast<std::size_t>(opt.scan_points));
    std::vector<double> m(static_cast<std::size_t>(opt.scan_points));
    double m_max = 0.0;
    for (int i = 0; i < opt.scan_points; ++i) {
        phis[static_cast<std::size_t>(i)] = i / double(opt.scan_points);
        m[static_cast<std::size_t>(i)] = miss(phis[static_cast<std::size_t>(i)]);
        m_max = std::max(m_max, std::abs(m[static_cast<std::size_t>(i)]));
    }

    std::vector<double> roots;
    bool degenerate = false;
    if (m_max < opt.degenerate_tol) {
        degenerate = true; // manifolds coincide within resolution
        roots.push_back(0.0);
    } else {
        for (int i = 0; i < opt.scan_points; ++i) {
            const double a = phis[static_cast<std::size_t>(i)];
            const double fa = m[static_cast<std::size_t>(i)];
            const double b = (i + 1 < opt.scan_points) ? phis[static_cast<std::size_t>(i + 1)]
                                                       : 1.0;
            const double fb = (i + 1 < opt.scan_points)
                                  ? m[static_cast<std::size_t>(i + 1)]
                                  : m[0];
            if (fa == 0.0) {
                roots.push_back(a);
                continue;
            }
            if (fa * fb < 0.0) {
                double lo = a, hi = b, flo = fa;
                for (int it = 0; it < 100 && hi - lo > 1e-13; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = miss(mid);
                    if (std::abs(fm) < opt.bisect_tol * 1e-2) {
                        lo = hi = mid;
                        break;
                    }
                    if (flo * fm < 0.0)
                        hi = mid;
                    else {
                        lo = mid;
                        flo = fm;
                    }
                }
                roots.push_back(0.5 * (lo + hi));
            }
        }
        if (roots.empty())
            throw std::runtime_error(
                "find_instanton: no sign change in the miss function; system out of the "
                "transversal regime");
    }

    // integrate the full path for each root, keep the smallest action
    InstantonPath best;
    double best_action = 1e300;
    for (double phi0 : roots) {
        InstantonPath path;
        path.phi0 = phi0;
        path.degenerate = degenerate;
        detail::ReducedState st;
        st.r = -0.5 + opt.delta_init;
        st.p_r = opt.delta_init * lp_at(phi0);
        st.action = 0.5 * lp_at(phi0) * opt.delta_init * opt.delta_init;
        double phi = phi0;
        const double phi_end = phi0 + opt.phi_budget;
        auto push = [&](double ph, const detail::ReducedState& s) {
            InstantonSample smp;
            smp.phi = ph;
            smp.r = s.r;
            smp.p_r = s.p_r;
            smp.p_phi = detail::p_phi_on_shell(sys, s.r, ph, s.p_r);
            smp.t = s.t;
            smp.action = s.action;
            path.samples.push_back(smp);
        };
        push(phi, st);
        bool landed = false;
        while (phi < phi_end) {
            if (!detail::reduced_rk4_step(sys, phi, st, opt.dphi)) break;
            push(phi, st);
            if (st.r >= -opt.delta_tail) {
                landed = true;
                break;
            }
        }
        if (!landed && !degenerate) continue;
        // analytic tail: remaining action from -delta_tail to the orbit along
        // the contracting fiber
        const std::size_t n = lm.size();
        const double x = fractional_part(phi) * n;
        const std::size_t i = std::min(static_cast<std::size_t>(x), n - 1);
        const double lmf = lm[i];
        const double total =
            st.action + 0.5 * std::abs(lmf) * opt.delta_tail * opt.delta_tail;
        if (total < best_action) {
            best_action = total;
            path.action = total;
            path.miss_residual = degenerate ? m_max : 0.0;
            best = std::move(path);
        }
    }
    if (best.samples.empty())
        throw std::runtime_error("find_instanton: shooting failed to land on the stable "
                                 "manifold of the unstable orbit");
    return best;
}

// ---------------------------------------------------------------------------
// Action to reach the level r = -delta_level as a function of the crossing
// phase, from the one-parameter family of trajectories in the unstable
// manifold of the stable orbit.  Backs the quasipotential computation.
struct FamilyPoint {
    double phi0 = 0.0;           // starting slice
    double crossing_phase = 0.0; // phi mod 1 where r = -delta_level
    double action = 0.0;         // rate function up to the crossing + fiber tail
};

template <PlanarSystem S>
std::vector<FamilyPoint> instanton_family_scan(const S& sys, const OrbitConstants& c,
                                               double delta_level, int n_slices = 33,
                                               ShootingOptions opt = {}) {
    std::vector<FamilyPoint> out;
    const int n_slice = 64;
    std::vector<double> lp(n_slice), lm(n_slice);
    for (int i = 0; i < n_slice; ++i) {
        lp[static_cast<std::size_t>(i)] = detail::fiber_slope(sys, -0.5, i / double(n_slice));
        lm[static_cast<std::size_t>(i)] = detail::fiber_slope(sys, 0.0, i / double(n_slice));
    }
    for (int k = 0; k < n_slices; ++k) {
        const double phi0 = k / double(n_slices);
        const double x0 = fractional_part(phi0) * n_slice;
        const int i0 = std::min(static_cast<int>(x0), n_slice - 1);
        const double w0 = x0 - i0;
        const double lp0 = lp[static_cast<std::size_t>(i0)] * (1.0 - w0) +
                           lp[static_cast<std::size_t>((i0 + 1) % n_slice)] * w0;

        detail::ReducedState st;
        st.r = -0.5 + opt.delta_init;
        st.p_r = opt.delta_init * lp0;
        st.action = 0.5 * lp0 * opt.delta_init * opt.delta_init;
        double phi = phi0;
        const double phi_end = phi0 + opt.phi_budget;
        double prev_r = st.r, prev_phi = phi, prev_I = st.action;
        bool crossed = false;
        while (phi < phi_end) {
            prev_r = st.r;
            prev_phi = phi;
            prev_I = st.action;
            if (!detail::reduced_rk4_step(sys, phi, st, opt.dphi)) break;
            if (st.r >= -delta_level) {
                const double w = (-delta_level - prev_r) / (st.r - prev_r);
                FamilyPoint fp;
                fp.phi0 = phi0;
                fp.crossing_phase = fractional_part(prev_phi + w * (phi - prev_phi));
                const double xc = fp.crossing_phase * n_slice;
                const std::size_t ic = std::min(static_cast<std::size_t>(xc),
                                                static_cast<std::size_t>(n_slice - 1));
                const double wc = xc - ic;
                const double lmc = lm[ic] * (1.0 - wc) + lm[(ic + 1) % n_slice] * wc;
                fp.action = prev_I + w * (st.action - prev_I) +
                            0.5 * std::abs(lmc) * delta_level * delta_level;
                out.push_back(fp);
                crossed = true;
                break;
            }
        }
        (void)crossed;
    }
    if (out.empty()) throw std::runtime_error("instanton_family_scan: no crossings found");
    return out;
}

// Quasipotential on the unstable orbit at the sampled phases: minimal cost to
// reach crossing phase s, interpolated circularly from the family scan.
template <PlanarSystem S>
std::vector<double> quasipotential_on_boundary(const S& sys, const OrbitConstants& c,
                                               const std::vector<double>& phases,
                                               double delta_level = 5e-3) {
    auto fam = instanton_family_scan(sys, c, delta_level);
    std::vector<std::pair<double, double>> pts; // (crossing phase, action)
    pts.reserve(fam.size());
    for (const auto& f : fam) pts.emplace_back(f.crossing_phase, f.action);
    std::sort(pts.begin(), pts.end());

    std::vector<double> out;
    out.reserve(phases.size());
    for (double ph : phases) {
        const double x = fractional_part(ph);
        // circular linear interpolation
        std::size_t hi = 0;
        while (hi < pts.size() && pts[hi].first < x) ++hi;
        const std::size_t i1 = hi % pts.size();
        const std::size_t i0 = (i1 + pts.size() - 1) % pts.size();
        double x0 = pts[i0].first, x1 = pts[i1].first;
        double xq = x;
        if (x1 <= x0) { // wrapped segment
            x1 += 1.0;
            if (xq < x0) xq += 1.0;
        }
        const double w = (x1 > x0) ? (xq - x0) / (x1 - x0) : 0.0;
        out.push_back(pts[i0].second * (1.0 - w) + pts[i1].second * w);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gamma^s curves: the image of { r = +/- delta sqrt(2 lambda T h_per(phi)) }
// under the deterministic flow run for theta-time u = s - log(delta),
// tabulated over one period.  The result is delta-independent once delta is
// small (checked by the caller at delta vs delta/2).
template <PlanarSystem S>
PeriodicTable gamma_s_curve(const S& sys, const OrbitGeometry& geom, double s, double delta,
                            bool plus_side, int n_points = 256) {
    const double u = s - std::log(delta);
    if (!(u > 0.0))
        throw std::invalid_argument("gamma_s_curve: need s - log(delta) > 0; decrease delta");
    if (!(delta * geom.scaled_width(0.0) < 0.3))
        throw std::invalid_argument("gamma_s_curve: delta too large for the linear regime");

    const int n_launch = 2 * n_points;
    std::vector<std::pair<double, double>> end_pts(static_cast<std::size_t>(n_launch));
    const double dphi = 1e-3;
    for (int i = 0; i < n_launch; ++i) {
        const double phi0 = i / double(n_launch);
        double r = (plus_side ? 1.0 : -1.0) * delta * geom.scaled_width(phi0);
        double phi = phi0;
        double theta_acc = 0.0;
        // deterministic flow dr/dphi = f_r / f_phi with the theta clock
        while (theta_acc < u) {
            const double k1r = sys.f_r(r, phi) / sys.f_phi(r, phi);
            const double k1t = geom.theta_prime(phi);
            const double rm = r + 0.5 * dphi * k1r;
            const double k2r = sys.f_r(rm, phi + 0.5 * dphi) / sys.f_phi(rm, phi + 0.5 * dphi);
            const double k2t = geom.theta_prime(phi + 0.5 * dphi);
            const double rm2 = r + 0.5 * dphi * k2r;
            const double k3r = sys.f_r(rm2, phi + 0.5 * dphi) / sys.f_phi(rm2, phi + 0.5 * dphi);
            const double k3t = k2t;
            const double re = r + dphi * k3r;
            const double k4r = sys.f_r(re, phi + dphi) / sys.f_phi(re, phi + dphi);
            const double k4t = geom.theta_prime(phi + dphi);
            const double dtheta = dphi / 6.0 * (k1t + 2 * k2t + 2 * k3t + k4t);
            if (theta_acc + dtheta >= u) {
                const double w = (u - theta_acc) / dtheta;
                r += w * dphi / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r);
                phi += w * dphi;
                theta_acc = u;
                break;
            }
            r += dphi / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r);
            phi += dphi;
            theta_acc += dtheta;
            if (std::abs(r) >= 0.5)
                throw std::runtime_error("gamma_s_curve: curve escaped the half-period strip; "
                                         "s too large for this delta");
        }
        end_pts[static_cast<std::size_t>(i)] = {fractional_part(phi), r};
    }
    std::sort(end_pts.begin(), end_pts.end());

    // resample onto a uniform grid with circular linear interpolation
    std::vector<double> values(static_cast<std::size_t>(n_points));
    for (int j = 0; j < n_points; ++j) {
        const double x = j / double(n_points);
        std::size_t hi = 0;
        while (hi < end_pts.size() && end_pts[hi].first < x) ++hi;
        const std::size_t i1 = hi % end_pts.size();
        const std::size_t i0 = (i1 + end_pts.size() - 1) % end_pts.size();
        double x0 = end_pts[i0].first, x1 = end_pts[i1].first;
        double xq = x;
        if (x1 <= x0) {
            x1 += 1.0;
            if (xq < x0) xq += 1.0;
        }
        const double w = (x1 > x0) ? (xq - x0) / (x1 - x0) : 0.0;
        values[static_cast<std::size_t>(j)] =
            end_pts[i0].second * (1.0 - w) + end_pts[i1].second * w;
    }
    return PeriodicTable(std::move(values));
}

struct GammaCurves {
    PeriodicTable minus;
    PeriodicTable plus;
    double s = 0.0;
    double delta = 0.0;
};

template <PlanarSystem S>
GammaCurves gamma_s_curves(const S& sys, const OrbitGeometry& geom, double s, double delta) {
    GammaCurves g;
    g.minus = gamma_s_curve(sys, geom, s, delta, false);
    g.plus = gamma_s_curve(sys, geom, s, delta, true);
    g.s = s;
    g.delta = delta;
    return g;
}

} // namespace slipsim
