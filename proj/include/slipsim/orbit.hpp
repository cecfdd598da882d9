// Orbit-derived quantities: characteristic exponents, the periodic variance
// function h_per, and the theta / theta_delta parametrizations of the
// unstable orbit.

#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "slipsim/numerics.hpp"
#include "slipsim/systems.hpp"

namespace slipsim {

struct OrbitConstants {
    double lambda_plus = 0.0;  // unstable exponent, > 0
    double lambda_minus = 0.0; // magnitude of the stable exponent, > 0
    double T_plus = 0.0;       // period of the unstable orbit
    double T_minus = 0.0;      // period of the stable orbit

    double lambdaT_plus() const { return lambda_plus * T_plus; }
    double lambdaT_minus() const { return lambda_minus * T_minus; }
};

namespace detail {

// The equal-time parametrization requires f_phi constant along each orbit;
// constructors must already supply systems in that form.
template <PlanarSystem S>
double orbit_fphi(const S& s, double r_orbit) {
    double v0 = s.f_phi(r_orbit, 0.0);
    for (int i = 1; i < 64; ++i) {
        const double v = s.f_phi(r_orbit, i / 64.0);
        if (std::abs(v - v0) > 1e-9 * std::max(1.0, std::abs(v0)))
            throw std::domain_error("equal-time parametrization violated: f_phi is not "
                                    "constant on the orbit r = " +
                                    std::to_string(r_orbit));
    }
    return v0;
}

} // namespace detail

// lambda_+ = int_0^1 d_r f_r(0,phi) dphi and the stable analogue at r = 1/2,
// by 256-node Simpson; derivatives analytic when available, else central
// differences.
template <PlanarSystem S>
OrbitConstants compute_exponents(const S& s, int quad_nodes = 256) {
    OrbitConstants c;
    c.lambda_plus = simpson([&](double phi) { return dfr_dr(s, 0.0, phi); }, 0.0, 1.0, quad_nodes);
    c.lambda_minus =
        -simpson([&](double phi) { return dfr_dr(s, 0.5, phi); }, 0.0, 1.0, quad_nodes);
    if (!(c.lambda_plus > 0.0))
        throw std::domain_error("compute_exponents: lambda_+ <= 0, orbit at r = 0 is not "
                                "unstable as assumed");
    if (!(c.lambda_minus > 0.0))
        throw std::domain_error("compute_exponents: lambda_- <= 0, orbit at r = 1/2 is not "
                                "stable as assumed");
    c.T_plus = 1.0 / detail::orbit_fphi(s, 0.0);
    c.T_minus = 1.0 / detail::orbit_fphi(s, 0.5);
    return c;
}

// Unique bounded periodic solution of  dh/dphi = 2 lambda T h - D_rr(0,phi):
//   h(phi) = int_phi^infty e^{2 lambda T (phi - u)} D_rr(0,u) du,
// truncated once the kernel tail e^{-2 lambda T H} drops below 1e-12.  The
// tail periods form a geometric series of the one-period integral, which the
// evaluation uses directly.
class HPerSolver {
  public:
    HPerSolver(std::function<double(double)> d_rr_on_orbit, double lambdaT, int sub_nodes = 2048)
        : d_rr_(std::move(d_rr_on_orbit)), lambdaT_(lambdaT), sub_(sub_nodes) {
        if (!(lambdaT_ > 0.0)) throw std::domain_error("h_per: lambda_+ T_+ must be > 0");
        periods_ = static_cast<int>(std::ceil(6.0 * std::log(10.0) / lambdaT_));
        if (periods_ < 2) periods_ = 2;
        const double rho = std::exp(-2.0 * lambdaT_);
        geom_ = (1.0 - std::pow(rho, periods_)) / (1.0 - rho);
    }

    double operator()(double phi) const {
        const double one_period = simpson(
            [&](double u) { return std::exp(-2.0 * lambdaT_ * u) * d_rr_(phi + u); }, 0.0, 1.0,
            sub_);
        return one_period * geom_;
    }

    int truncation_periods() const { return periods_; }
    double truncation_tail() const { return std::exp(-2.0 * lambdaT_ * periods_); }

  private:
    std::function<double(double)> d_rr_;
    double lambdaT_;
    int sub_;
    int periods_;
    double geom_;
};

// Parametrization data of the unstable orbit.  Tables hold 1024 uniform
// phi-points with linear interpolation; *_exact methods evaluate the
// underlying quadrature pointwise for tight-tolerance checks.
class OrbitGeometry {
  public:
    template <PlanarSystem S>
    OrbitGeometry(const S& s, const OrbitConstants& c, int table_size = 1024)
        : constants_(c),
          solver_([sys = s](double phi) { return diffusion_rr(sys, 0.0, phi); },
                  c.lambdaT_plus()),
          d_rr_([sys = s](double phi) { return diffusion_rr(sys, 0.0, phi); }) {
        h_table_ = PeriodicTable::tabulate([&](double phi) { return solver_(phi); },
                                           static_cast<std::size_t>(table_size));
        h0_ = h_table_.values()[0];
        if (h_table_.min_value() <= 0.0)
            throw std::runtime_error("h_per must be positive on the tabulation grid");
    }

    const OrbitConstants& constants() const { return constants_; }
    double lambdaT() const { return constants_.lambdaT_plus(); }

    double h_per(double phi) const { return h_table_(phi); }
    double h_per_exact(double phi) const { return solver_(fractional_part(phi)); }
    double h0() const { return h0_; }

    // theta(phi) = lambda T phi - (1/2) log( h(phi) / (2 h(0)^2) )
    double theta(double phi) const {
        return lambdaT() * phi - 0.5 * std::log(h_table_(phi) / (2.0 * h0_ * h0_));
    }
    double theta_exact(double phi) const {
        return lambdaT() * phi - 0.5 * std::log(h_per_exact(phi) / (2.0 * h0_ * h0_));
    }
    double theta_prime(double phi) const {
        return d_rr_(fractional_part(phi)) / (2.0 * h_table_(phi));
    }

    // width of the scaled neighbourhood: r = delta * sqrt(2 lambda T h(phi))
    double scaled_width(double phi) const { return std::sqrt(2.0 * lambdaT() * h_table_(phi)); }

    // crossing phase of the instanton at level -delta (set once available)
    void set_crossing_table(std::function<double(double)> s_star_of_delta) {
        s_star_ = std::move(s_star_of_delta);
    }
    bool has_crossing_table() const { return static_cast<bool>(s_star_); }
    double s_star(double delta) const {
        if (!s_star_)
            throw std::logic_error("theta_delta requires the instanton crossing table");
        return s_star_(delta);
    }

    // theta_delta(phi) = theta(phi) - log delta + log( h(s*_delta) / h(0) )
    double theta_delta_shift(double delta) const {
        return -std::log(delta) + std::log(h_table_(s_star(delta)) / h0_);
    }
    double theta_delta(double phi, double delta) const {
        return theta(phi) + theta_delta_shift(delta);
    }

    const PeriodicTable& h_table() const { return h_table_; }
    const HPerSolver& solver() const { return solver_; }

    // residual of the defining ODE at phi, derivative by 4th-order differences
    // of the pointwise quadrature
    double ode_residual(double phi) const {
        const double dh = derivative([&](double x) { return h_per_exact(x); }, phi, 1e-4);
        return dh - 2.0 * lambdaT() * h_per_exact(phi) + d_rr_(fractional_part(phi));
    }

  private:
    OrbitConstants constants_;
    HPerSolver solver_;
    std::function<double(double)> d_rr_;
    PeriodicTable h_table_;
    double h0_ = 0.0;
    std::function<double(double)> s_star_;
};

template <PlanarSystem S>
OrbitGeometry build_geometry(const S& s, const OrbitConstants& c, int table_size = 1024) {
    return OrbitGeometry(s, c, table_size);
}

} // namespace slipsim
