// Planar periodic SDE systems
//
//   dr   = f_r(r,phi) dt   + sigma * g_r(r,phi) . dW
//   dphi = f_phi(r,phi) dt + sigma * g_phi(r,phi) . dW
//
// with period 1 in both variables, unstable orbits on {r = n} and stable
// orbits on {r = n + 1/2}.  Systems are plain structs satisfying the
// PlanarSystem concept so the simulation loops inline their fields.

#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "slipsim/numerics.hpp"

namespace slipsim {

template <class S>
concept PlanarSystem = requires(const S& s, double r, double phi) {
    { S::noise_dim } -> std::convertible_to<int>;
    { s.f_r(r, phi) } -> std::convertible_to<double>;
    { s.f_phi(r, phi) } -> std::convertible_to<double>;
    { s.g_row_r(r, phi) } -> std::convertible_to<std::array<double, S::noise_dim>>;
    { s.g_row_phi(r, phi) } -> std::convertible_to<std::array<double, S::noise_dim>>;
};

// true when the system declares a constant identity diffusion matrix
template <class S>
inline constexpr bool identity_noise_v = [] {
    if constexpr (requires { S::identity_noise; })
        return static_cast<bool>(S::identity_noise);
    else
        return false;
}();

// diffusion matrix entries D = g g^T
template <PlanarSystem S>
double diffusion_rr(const S& s, double r, double phi) {
    const auto g = s.g_row_r(r, phi);
    double v = 0.0;
    for (double x : g) v += x * x;
    return v;
}

template <PlanarSystem S>
double diffusion_rphi(const S& s, double r, double phi) {
    const auto gr = s.g_row_r(r, phi);
    const auto gp = s.g_row_phi(r, phi);
    double v = 0.0;
    for (int i = 0; i < S::noise_dim; ++i) v += gr[i] * gp[i];
    return v;
}

template <PlanarSystem S>
double diffusion_phiphi(const S& s, double r, double phi) {
    const auto g = s.g_row_phi(r, phi);
    double v = 0.0;
    for (double x : g) v += x * x;
    return v;
}

// drift derivatives: analytic when the system provides them, otherwise
// central differences with step 1e-5
template <class S>
concept HasAnalyticDerivatives = requires(const S& s, double r, double phi) {
    { s.d_fr_dr(r, phi) } -> std::convertible_to<double>;
    { s.d_fr_dphi(r, phi) } -> std::convertible_to<double>;
    { s.d_fphi_dr(r, phi) } -> std::convertible_to<double>;
    { s.d_fphi_dphi(r, phi) } -> std::convertible_to<double>;
};

inline constexpr double fd_step = 1e-5;

template <PlanarSystem S>
double dfr_dr(const S& s, double r, double phi) {
    if constexpr (HasAnalyticDerivatives<S>)
        return s.d_fr_dr(r, phi);
    else
        return central_diff([&](double x) { return s.f_r(x, phi); }, r, fd_step);
}

template <PlanarSystem S>
double dfr_dphi(const S& s, double r, double phi) {
    if constexpr (HasAnalyticDerivatives<S>)
        return s.d_fr_dphi(r, phi);
    else
        return central_diff([&](double x) { return s.f_r(r, x); }, phi, fd_step);
}

template <PlanarSystem S>
double dfphi_dr(const S& s, double r, double phi) {
    if constexpr (HasAnalyticDerivatives<S>)
        return s.d_fphi_dr(r, phi);
    else
        return central_diff([&](double x) { return s.f_phi(x, phi); }, r, fd_step);
}

template <PlanarSystem S>
double dfphi_dphi(const S& s, double r, double phi) {
    if constexpr (HasAnalyticDerivatives<S>)
        return s.d_fphi_dphi(r, phi);
    else
        return central_diff([&](double x) { return s.f_phi(r, x); }, phi, fd_step);
}

// ---------------------------------------------------------------------------
// Melnikov-perturbed system:
//   f_r = sin(2 pi r) [1 + eps sin(2 pi r) cos(2 pi phi)],  f_phi = omega,
// with unit diffusion matrix.  eps = 0 is rotation invariant; small eps > 0
// breaks the degeneracy of the stable/unstable manifolds.
struct MelnikovSystem {
    static constexpr int noise_dim = 2;
    static constexpr bool identity_noise = true;

    double eps = 0.0;
    double omega = 1.0;

    double f_r(double r, double phi) const {
        const double s = std::sin(two_pi * r);
        return s * (1.0 + eps * s * std::cos(two_pi * phi));
    }
    double f_phi(double, double) const { return omega; }

    std::array<double, 2> g_row_r(double, double) const { return {1.0, 0.0}; }
    std::array<double, 2> g_row_phi(double, double) const { return {0.0, 1.0}; }

    double d_fr_dr(double r, double phi) const {
        return two_pi * std::cos(two_pi * r) +
               two_pi * eps * std::sin(2.0 * two_pi * r) * std::cos(two_pi * phi);
    }
    double d_fr_dphi(double r, double phi) const {
        const double s = std::sin(two_pi * r);
        return -two_pi * eps * s * s * std::sin(two_pi * phi);
    }
    double d_fphi_dr(double, double) const { return 0.0; }
    double d_fphi_dphi(double, double) const { return 0.0; }
};

inline MelnikovSystem build_melnikov_system(double eps, double omega) {
    if (!(std::abs(eps) < 0.5))
        throw std::domain_error("build_melnikov_system: |eps| must be < 0.5, "
                                "orbit structure changes beyond");
    if (!(omega > 0.0)) throw std::domain_error("build_melnikov_system: omega must be > 0");
    return MelnikovSystem{eps, omega};
}

// ---------------------------------------------------------------------------
// Averaged washboard system with Adler nonlinearity:
//   psi' = -nu + eps sin(2 pi psi) = -V'(psi),
//   V(psi) = nu psi + eps (cos(2 pi psi) - 1) / (2 pi).
// Synchronization requires |nu| < |eps|.  The radial coordinate is
// renormalized by a monotone C^1 period map u so that the unstable state
// sits at r = n and the stable one at r = n + 1/2 exactly.
struct WashboardSystem {
    static constexpr int noise_dim = 2;
    static constexpr bool identity_noise = false;

    double nu = 0.0;
    double eps = 1.0;
    double omega = 1.0;

    // orbit positions of the raw Adler drift and map data
    double psi_u = 0.0;   // unstable zero of -V'
    double psi_s = 0.5;   // stable zero
    double seg1 = 0.5;    // psi_s - psi_u
    double slope = 1.0;   // common end slope of the two Hermite segments

    double potential(double psi) const {
        return nu * psi + eps * (std::cos(two_pi * psi) - 1.0) / two_pi;
    }
    double drift_psi(double psi) const { return -nu + eps * std::sin(two_pi * psi); }
    double d_drift_psi(double psi) const { return two_pi * eps * std::cos(two_pi * psi); }

    // period map r -> psi, u(r + 1) = u(r) + 1, u(0) = psi_u, u(1/2) = psi_s
    double u_map(double r) const {
        const double k = std::floor(r);
        const double x = r - k;
        double y;
        if (x < 0.5)
            y = hermite(x / 0.5, psi_u, psi_s, 0.5 * slope, 0.5 * slope);
        else
            y = hermite((x - 0.5) / 0.5, psi_s, psi_u + 1.0, 0.5 * slope, 0.5 * slope);
        return y + k;
    }
    double u_prime(double r) const {
        const double x = r - std::floor(r);
        if (x < 0.5) return hermite_d(x / 0.5, psi_u, psi_s, 0.5 * slope, 0.5 * slope) / 0.5;
        return hermite_d((x - 0.5) / 0.5, psi_s, psi_u + 1.0, 0.5 * slope, 0.5 * slope) / 0.5;
    }

    double f_r(double r, double phi) const {
        (void)phi;
        return drift_psi(u_map(r)) / u_prime(r);
    }
    double f_phi(double, double) const { return omega; }

    std::array<double, 2> g_row_r(double r, double) const { return {1.0 / u_prime(r), 0.0}; }
    std::array<double, 2> g_row_phi(double, double) const { return {0.0, 1.0}; }

  private:
    static double hermite(double x, double y0, double y1, double m0, double m1) {
        const double d = y1 - y0;
        const double a2 = 3.0 * d - 2.0 * m0 - m1;
        const double a3 = -2.0 * d + m0 + m1;
        return y0 + x * (m0 + x * (a2 + x * a3));
    }
    static double hermite_d(double x, double y0, double y1, double m0, double m1) {
        const double d = y1 - y0;
        const double a2 = 3.0 * d - 2.0 * m0 - m1;
        const double a3 = -2.0 * d + m0 + m1;
        return m0 + x * (2.0 * a2 + 3.0 * x * a3);
    }
};

struct WashboardModel {
    WashboardSystem system;                  // normalized planar system
    std::array<double, 2> stationary_points; // {unstable, stable} in psi coordinates
};

inline WashboardModel build_washboard_system(double nu, double eps, double omega) {
    if (!(std::abs(nu) < std::abs(eps)))
        throw std::domain_error(
            "build_washboard_system: |nu| >= |eps|, no phase-locked state (Adler drift "
            "-nu + eps sin(2 pi psi) has no zeros)");
    if (!(omega > 0.0)) throw std::domain_error("build_washboard_system: omega must be > 0");

    WashboardSystem s;
    s.nu = nu;
    s.eps = eps;
    s.omega = omega;
    const double asn = std::asin(nu / eps) / two_pi;
    // unstable zero has d(drift)/dpsi > 0 for eps > 0
    double pu = asn, ps = 0.5 - asn;
    if (eps < 0.0) std::swap(pu, ps);
    double L1 = ps - pu;
    L1 -= std::floor(L1); // gap unstable -> stable, in (0,1)
    s.psi_u = pu - std::floor(pu);
    s.psi_s = s.psi_u + L1;
    s.seg1 = L1;
    // monotone Hermite end slope (Fritsch-Carlson: slope <= 3 * segment mean)
    s.slope = std::min(2.0 * L1, 2.0 * (1.0 - L1));
    return WashboardModel{s, {s.psi_u, s.psi_s}};
}

// ---------------------------------------------------------------------------
// Linearization of a system around the unstable orbit:
//   dr = lambda r dt + sigma dW_1,  dphi = dt / T.
struct LinearOrbitSystem {
    static constexpr int noise_dim = 2;
    static constexpr bool identity_noise = true;

    double lambda = 1.0;
    double T = 1.0;

    double f_r(double r, double) const { return lambda * r; }
    double f_phi(double, double) const { return 1.0 / T; }
    std::array<double, 2> g_row_r(double, double) const { return {1.0, 0.0}; }
    std::array<double, 2> g_row_phi(double, double) const { return {0.0, 1.0}; }
    double d_fr_dr(double, double) const { return lambda; }
    double d_fr_dphi(double, double) const { return 0.0; }
    double d_fphi_dr(double, double) const { return 0.0; }
    double d_fphi_dphi(double, double) const { return 0.0; }
};

// ---------------------------------------------------------------------------
// Structural validation on a sampled grid.
struct ValidationReport {
    double orbit_drift_max = 0.0;   // max |f_r| on r = n/2, n = -2..2
    double ellipticity_c1 = 0.0;    // min eigenvalue of D over the grid
    double ellipticity_c2 = 0.0;    // max eigenvalue
    double fphi_min = 0.0;          // min f_phi over the grid
    double periodicity_dev = 0.0;   // max |field(x) - field(x + e_i)|
    bool ok = false;
    std::string message;
};

template <PlanarSystem S>
ValidationReport validate_system(const S& s, int grid = 64) {
    ValidationReport rep;
    double drift = 0.0;
    for (int n = -2; n <= 2; ++n) {
        for (int i = 0; i < grid; ++i) {
            const double phi = static_cast<double>(i) / grid;
            drift = std::max(drift, std::abs(s.f_r(0.5 * n, phi)));
        }
    }
    rep.orbit_drift_max = drift;

    double c1 = 1e300, c2 = -1e300, fmin = 1e300, per = 0.0;
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
            const double r = -1.0 + 2.0 * i / grid;
            const double phi = static_cast<double>(j) / grid;
            const double a = diffusion_rr(s, r, phi);
            const double b = diffusion_rphi(s, r, phi);
            const double c = diffusion_phiphi(s, r, phi);
            const double tr = a + c;
            const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * (a * c - b * b)));
            c1 = std::min(c1, 0.5 * (tr - disc));
            c2 = std::max(c2, 0.5 * (tr + disc));
            fmin = std::min(fmin, s.f_phi(r, phi));
            per = std::max(per, std::abs(s.f_r(r, phi) - s.f_r(r + 1.0, phi)));
            per = std::max(per, std::abs(s.f_r(r, phi) - s.f_r(r, phi + 1.0)));
            per = std::max(per, std::abs(s.f_phi(r, phi) - s.f_phi(r + 1.0, phi)));
            per = std::max(per, std::abs(s.f_phi(r, phi) - s.f_phi(r, phi + 1.0)));
        }
    }
    rep.ellipticity_c1 = c1;
    rep.ellipticity_c2 = c2;
    rep.fphi_min = fmin;
    rep.periodicity_dev = per;

    rep.ok = drift < 1e-9 && c1 > 0.0 && fmin > 0.0 && per < 1e-9;
    rep.message = rep.ok ? "ok"
                         : "structural assumption violated (orbit drift " +
                               std::to_string(drift) + ", c1 " + std::to_string(c1) +
                               ", min f_phi " + std::to_string(fmin) + ", periodicity dev " +
                               std::to_string(per) + ")";
    return rep;
}

} // namespace slipsim
