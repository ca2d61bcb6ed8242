#pragma once

/// Radially symmetric solver for du/dt = Lap(log u) on the disc of radius a,
/// with either the power-law flux condition du/deta = 2*gamma*u^p or the
/// constant-geodesic-curvature condition d(log u)/dr (a) = 2*beta*sqrt(u) - 2/a
/// at the rim.  Includes the shrinking-hemisphere exact solution used as the
/// convergence and blow-down oracle.
///
/// Discretization: finite-volume form of (1/r) d/dr (r dw/dr) on a uniform
/// grid of [0, a]; the origin uses the symmetry row 4(w1 - w0)/h^2 (regularity
/// dw/dr(0) = 0), the rim eliminates the ghost node through the boundary
/// slope.  Time stepping reuses the damped-Newton backward-Euler machinery of
/// the interval solver.

#include "core.hpp"
#include "solver1d.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace logdiff {

/// Uniform radial grid on [0, a].
struct RadialGrid {
    double a = 1.0;  ///< disc radius, positive
    int n = 65;      ///< nodes on [0, a] including both ends, at least 3

    double h() const { return a / static_cast<double>(n - 1); }
    double r(int i) const { return static_cast<double>(i) * h(); }

    void validate() const {
        if (!(a > 0.0)) throw std::invalid_argument("RadialGrid: radius must be positive");
        if (n < 3) throw std::invalid_argument("RadialGrid: need at least 3 nodes");
    }
};

/// Boundary condition at the rim, in one of two forms:
///  - power-law flux  d(log u)/dr = 2*gamma*u^(p-1)   (as on the cylinder)
///  - constant geodesic curvature beta of the boundary circle, which in
///    conformal terms reads d(log u)/dr = 2*beta*sqrt(u) - 2/a.  beta = 0 is
///    the geodesic-rim case the shrinking hemisphere satisfies exactly.
struct DiscBoundary {
    enum class Form { robin, curvature };
    Form form = Form::robin;
    double gamma = 0.0;  ///< flux coefficient (robin form)
    double p = 1.5;      ///< flux exponent (robin form)
    double beta = 0.0;   ///< boundary geodesic curvature (curvature form)

    static DiscBoundary robin_form(double gamma, double p) {
        DiscBoundary b;
        b.form = Form::robin;
        b.gamma = gamma;
        b.p = p;
        return b;
    }
    static DiscBoundary curvature_form(double beta) {
        DiscBoundary b;
        b.form = Form::curvature;
        b.beta = beta;
        return b;
    }

    void validate() const {
        if (form == Form::robin) {
            if (!std::isfinite(gamma) || !std::isfinite(p))
                throw std::invalid_argument("DiscBoundary: gamma and p must be finite");
        } else if (!std::isfinite(beta)) {
            throw std::invalid_argument("DiscBoundary: beta must be finite");
        }
    }

    /// Target rim slope g = d(log u)/dr (a) as a function of w(a).
    double rim_slope(double w_rim, double a) const {
        if (form == Form::robin) return 2.0 * gamma * std::exp((p - 1.0) * w_rim);
        return 2.0 * beta * std::exp(0.5 * w_rim) - 2.0 / a;
    }

    /// d(rim_slope)/dw at the rim node, for the Newton matrix.
    double rim_slope_derivative(double w_rim) const {
        if (form == Form::robin) return 2.0 * gamma * (p - 1.0) * std::exp((p - 1.0) * w_rim);
        return beta * std::exp(0.5 * w_rim);
    }
};

/// The radial problem, shaped for the shared Newton/adaptive machinery.
class DiscProblem {
public:
    DiscProblem(RadialGrid grid, DiscBoundary bc) : grid_(grid), bc_(bc) {
        grid_.validate();
        bc_.validate();
    }

    const RadialGrid& grid() const { return grid_; }
    const DiscBoundary& bc() const { return bc_; }
    std::size_t size() const { return static_cast<std::size_t>(grid_.n); }

    /// Discrete (1/r) d/dr (r dw/dr): symmetry row at the origin, flux rows
    /// at the rim via ghost elimination through the central difference.
    void apply_operator(const std::vector<double>& w, double /*t*/, std::vector<double>& out) const {
        const std::size_t n = w.size();
        const double h = grid_.h();
        const double inv_h2 = 1.0 / (h * h);
        out.resize(n);
        out[0] = 4.0 * (w[1] - w[0]) * inv_h2;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double ri = grid_.r(static_cast<int>(i));
            const double rp = ri + 0.5 * h, rm = ri - 0.5 * h;
            out[i] = (rp * (w[i + 1] - w[i]) - rm * (w[i] - w[i - 1])) * inv_h2 / ri;
        }
        const double g = bc_.rim_slope(w[n - 1], grid_.a);
        out[n - 1] = 2.0 * (w[n - 2] - w[n - 1]) * inv_h2 +
                     (1.0 + 0.5 * h / grid_.a) * 2.0 * g / h;
    }

    void rhs(const std::vector<double>& w, double t, std::vector<double>& out) const {
        apply_operator(w, t, out);
    }

    /// Tridiagonal Newton matrix diag(exp(w)/dt) - d(rhs)/dw.
    void newton_matrix(const std::vector<double>& w, double dt, std::vector<double>& dl,
                       std::vector<double>& d, std::vector<double>& du) const {
        const std::size_t n = w.size();
        const double h = grid_.h();
        const double inv_h2 = 1.0 / (h * h);
        dl.assign(n - 1, 0.0);
        du.assign(n - 1, 0.0);
        d.assign(n, 0.0);
        d[0] = 4.0 * inv_h2;
        du[0] = -4.0 * inv_h2;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double ri = grid_.r(static_cast<int>(i));
            const double rp = ri + 0.5 * h, rm = ri - 0.5 * h;
            dl[i - 1] = -rm * inv_h2 / ri;
            du[i] = -rp * inv_h2 / ri;
            d[i] = (rp + rm) * inv_h2 / ri;  // = 2/h^2
        }
        dl[n - 2] = -2.0 * inv_h2;
        d[n - 1] = 2.0 * inv_h2 -
                   (1.0 + 0.5 * h / grid_.a) * 2.0 / h * bc_.rim_slope_derivative(w[n - 1]);
        for (std::size_t i = 0; i < n; ++i) d[i] += std::exp(w[i]) / dt;
    }

    /// Implicit-step nonlinear solve; tridiagonal Jacobian handled directly.
    detail::NewtonResult solve_implicit(const std::vector<double>& w_old, double dt, double t_new,
                                        const SolverConfig& cfg) const {
        return detail::newton_solve_tridiagonal(*this, w_old, dt, t_new, cfg);
    }

    /// Disc diagnostics: mass/area with the 2*pi*r weight, rim length
    /// 2*pi*a*sqrt(u(a)), Gauss-Bonnet against 4*pi (Euler characteristic 1).
    DiagnosticsRow diagnostics(const std::vector<double>& w, double t,
                               const std::vector<double>& lap) const {
        const std::size_t n = w.size();
        DiagnosticsRow row;
        row.t = t;
        row.u_min = std::numeric_limits<double>::infinity();
        row.u_max = -std::numeric_limits<double>::infinity();
        row.R_min = std::numeric_limits<double>::infinity();
        row.R_max = -std::numeric_limits<double>::infinity();
        std::vector<double> ru(n), r_lap(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = std::exp(w[i]);
            const double R = -lap[i] / u;
            const double ri = grid_.r(static_cast<int>(i));
            ru[i] = ri * u;
            r_lap[i] = ri * lap[i];
            row.u_min = std::min(row.u_min, u);
            row.u_max = std::max(row.u_max, u);
            row.R_min = std::min(row.R_min, R);
            row.R_max = std::max(row.R_max, R);
        }
        const double h = grid_.h();
        row.mass = 2.0 * M_PI * trapezoid(ru, h);
        row.area = row.mass;  // the Euclidean u-integral is the g-area of the disc
        const double u_rim = std::exp(w[n - 1]);
        row.length = 2.0 * M_PI * grid_.a * std::sqrt(u_rim);
        const double g = bc_.rim_slope(w[n - 1], grid_.a);
        // k ds over the rim: k = u^{-1/2}(1/a + g/2), ds = sqrt(u) a dtheta,
        // so the circle contributes 2*pi*(1 + a*g/2); Gauss-Bonnet demands
        // integral(R dA) + 2*integral(k ds) = 4*pi.
        row.gb_residual = -2.0 * M_PI * trapezoid(r_lap, h) + 2.0 * M_PI * grid_.a * g;
        row.boundary_flux = 2.0 * M_PI * grid_.a * g;  // dA/dt through the rim
        // Rim curvature for the length law, extrapolated from the interior
        // (the rim row itself carries an O(h) truncation term).
        auto R_at = [&](std::size_t i) { return -lap[i] / std::exp(w[i]); };
        row.r_boundary = n >= 5
                             ? detail::extrapolate_to_wall(R_at(n - 2), R_at(n - 3), R_at(n - 4))
                             : R_at(n - 1);
        row.lap_w_interior_min = std::numeric_limits<double>::infinity();
        row.lap_w_interior_max = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i + 1 < n; ++i) {
            row.lap_w_interior_min = std::min(row.lap_w_interior_min, lap[i]);
            row.lap_w_interior_max = std::max(row.lap_w_interior_max, lap[i]);
        }
        return row;
    }

private:
    RadialGrid grid_;
    DiscBoundary bc_;
};

/// du/dt field of the radial operator for a given state.
inline std::vector<double> apply_radial_log_diffusion(const SolutionState& state,
                                                      const DiscBoundary& bcd,
                                                      const RadialGrid& grid) {
    std::vector<double> lap;
    DiscProblem(grid, bcd).apply_operator(state.w, state.t, lap);
    return lap;
}

/// Shrinking-hemisphere exact solution u = 8(T-t)/(1+r^2)^2 on the unit disc
/// with a geodesic rim (curvature form, beta = 0): satisfies the PDE exactly,
/// vanishes uniformly at t = T, and keeps u_min(t)/(T-t) = 2.
inline double hemisphere_oracle(double r, double t, double T) {
    const double q = 1.0 + r * r;
    return 8.0 * (T - t) / (q * q);
}

/// Outward-slope mismatch at the rim: 3-point one-sided d(log u)/dr at r = a
/// minus the boundary-condition target.  Zero for compatible data.
inline double disc_compatibility_residual(const SolutionState& state, const DiscBoundary& bcd,
                                          const RadialGrid& grid) {
    if (state.w.size() != static_cast<std::size_t>(grid.n))
        throw std::invalid_argument("disc_compatibility_residual: state size mismatch");
    const double slope = outward_derivative_right(state.w, grid.h());
    return slope - bcd.rim_slope(state.w.back(), grid.a);
}

/// Repair nearly-compatible radial data by a collar correction near the rim:
/// adds amp * psi((r - (a - blend_width))/blend_width) to log u with the
/// cubic-quartic bump psi(s) = s^3 (s - 1), which vanishes to second order at
/// the collar's inner edge and leaves the rim VALUE unchanged while setting
/// the rim slope exactly (in the discrete 3-point sense).
inline SolutionState make_compatible_radial_data(const std::vector<double>& profile,
                                                 const DiscBoundary& bcd, const RadialGrid& grid,
                                                 double blend_width) {
    grid.validate();
    bcd.validate();
    if (profile.size() != static_cast<std::size_t>(grid.n))
        throw std::invalid_argument("make_compatible_radial_data: profile size mismatch");
    for (double v : profile)
        if (!(v > 0.0))
            throw std::invalid_argument("make_compatible_radial_data: profile must be positive");
    const double h = grid.h();
    if (!(blend_width >= 3.0 * h))
        throw std::invalid_argument("make_compatible_radial_data: blend_width must be >= 3h");
    if (!(blend_width < grid.a))
        throw std::invalid_argument("make_compatible_radial_data: blend_width must be < radius");

    SolutionState state;
    state.t = 0.0;
    state.w.resize(profile.size());
    for (std::size_t i = 0; i < profile.size(); ++i) state.w[i] = std::log(profile[i]);

    const std::size_t n = state.w.size();
    std::vector<double> bump(n, 0.0);
    const double r0 = grid.a - blend_width;
    for (std::size_t i = 0; i < n; ++i)
        bump[i] = detail::collar_bump((grid.r(static_cast<int>(i)) - r0) / blend_width);
    const double target = bcd.rim_slope(state.w.back(), grid.a);  // rim value unchanged by bump
    const double slope = outward_derivative_right(state.w, h);
    const double bump_slope = outward_derivative_right(bump, h);
    const double amp = (target - slope) / bump_slope;
    for (std::size_t i = 0; i < n; ++i) state.w[i] += amp * bump[i];
    return state;
}

/// Full adaptive run of the disc problem; same contract as the interval
/// solver's run (compatibility precondition, adaptive stepping, diagnostics
/// per accepted step, termination detection).
inline Trajectory run_disc(const SolutionState& u0, const DiscBoundary& bcd, const RadialGrid& grid,
                           const SolverConfig& cfg, double t_final,
                           std::vector<double> output_times = {}) {
    const double res = disc_compatibility_residual(u0, bcd, grid);
    if (!(std::abs(res) < 1e-6))
        throw std::invalid_argument("run_disc: initial data violates the compatibility condition");
    return integrate_adaptive(DiscProblem(grid, bcd), u0, cfg, t_final, std::move(output_times));
}

}  // namespace logdiff
