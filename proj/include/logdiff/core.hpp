#pragma once

/// Shared domain, boundary-condition, and configuration types for the
/// logarithmic-diffusion solvers, plus utilities for checking and enforcing
/// the initial-data/boundary compatibility condition.
///
/// The unknown is stored as w = log u throughout, which makes positivity of u
/// structural (any finite w is a positive state) and keeps the solvers well
/// conditioned near vanishing solutions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace logdiff {

/// Uniform grid on the interval [-l, l], node 0 at -l, node n-1 at +l.
struct Interval1D {
    double l = 1.0;  ///< half-length of the interval
    int n = 129;     ///< number of grid nodes (>= 3)

    double h() const { return 2.0 * l / static_cast<double>(n - 1); }
    double x(int i) const { return -l + static_cast<double>(i) * h(); }

    void validate() const {
        if (!(l > 0.0)) throw std::invalid_argument("Interval1D: l must be positive");
        if (n < 3) throw std::invalid_argument("Interval1D: need at least 3 nodes");
    }
};

/// Nonlinear flux boundary condition du/deta = 2*gamma*u^p (eta = outward
/// normal), equivalently d(log u)/deta = 2*gamma*u^(p-1).
struct RobinBoundary {
    double gamma = 0.0;  ///< signed boundary coefficient
    double p = 1.5;      ///< boundary exponent (any finite real)

    void validate() const {
        if (!std::isfinite(gamma)) throw std::invalid_argument("RobinBoundary: gamma must be finite");
        if (!std::isfinite(p)) throw std::invalid_argument("RobinBoundary: p must be finite");
    }
};

/// Grid values of w = log u at one instant.
struct SolutionState {
    double t = 0.0;
    std::vector<double> w;  ///< per-node log u

    double u(std::size_t i) const { return std::exp(w[i]); }
};

/// Time-stepping and nonlinear-solve controls shared by all solvers.
///
/// A step is accepted only when Newton converges and the per-node relative
/// change of u stays below step_rel_change; rejected steps halve dt, easy
/// steps grow it by 1.2x.  Runs terminate when u_max exceeds
/// blow_up_threshold, u_min falls below blow_down_threshold, dt falls below
/// dt_min (step_underflow), or t reaches t_final.
struct SolverConfig {
    double dt_init = 1e-3;
    double dt_min = 1e-15;
    double dt_max = 1e-2;
    double newton_tol = 1e-11;      ///< max-norm of the Newton update on w
    int newton_max_iter = 25;
    double step_rel_change = 0.2;   ///< max allowed |du/u| per accepted step
    double blow_up_threshold = 1e10;
    double blow_down_threshold = 1e-10;

    void validate() const {
        if (!(dt_min > 0.0 && dt_min <= dt_init && dt_init <= dt_max))
            throw std::invalid_argument("SolverConfig: need 0 < dt_min <= dt_init <= dt_max");
        if (!(newton_tol > 0.0)) throw std::invalid_argument("SolverConfig: newton_tol must be positive");
        if (newton_max_iter < 1) throw std::invalid_argument("SolverConfig: newton_max_iter must be >= 1");
        if (!(step_rel_change > 0.0)) throw std::invalid_argument("SolverConfig: step_rel_change must be positive");
        if (!(blow_down_threshold > 0.0 && blow_up_threshold > 0.0))
            throw std::invalid_argument("SolverConfig: thresholds must be positive");
        if (!(blow_down_threshold < 1.0 && 1.0 < blow_up_threshold))
            throw std::invalid_argument("SolverConfig: need blow_down_threshold < 1 < blow_up_threshold");
    }
};

/// Trapezoid quadrature of nodal values against uniform spacing h.
inline double trapezoid(const std::vector<double>& v, double h) {
    if (v.size() < 2) return 0.0;
    double s = 0.5 * (v.front() + v.back());
    for (std::size_t i = 1; i + 1 < v.size(); ++i) s += v[i];
    return s * h;
}

/// Second-order one-sided derivative of nodal values at the right end,
/// oriented outward (d/dx at x = +l).
inline double outward_derivative_right(const std::vector<double>& v, double h) {
    const std::size_t n = v.size();
    return (1.5 * v[n - 1] - 2.0 * v[n - 2] + 0.5 * v[n - 3]) / h;
}

/// Second-order one-sided derivative at the left end, oriented outward
/// (-d/dx at x = -l).
inline double outward_derivative_left(const std::vector<double>& v, double h) {
    return (1.5 * v[0] - 2.0 * v[1] + 0.5 * v[2]) / h;
}

/// Residual of the compatibility condition d(log u0)/deta = 2*gamma*u0^(p-1)
/// at the two ends, with the outward derivative evaluated by second-order
/// one-sided differences.  Returns {residual at -l, residual at +l}; both
/// vanish (to O(h^2)) exactly when the initial data agrees with the boundary
/// condition, which is what keeps solutions C^2 up to the corner.
inline std::pair<double, double> compatibility_residual(const SolutionState& state0,
                                                        const RobinBoundary& bc,
                                                        const Interval1D& dom) {
    dom.validate();
    bc.validate();
    if (state0.w.size() != static_cast<std::size_t>(dom.n))
        throw std::invalid_argument("compatibility_residual: state/grid size mismatch");
    const double h = dom.h();
    const std::vector<double>& w = state0.w;
    const double r_left = outward_derivative_left(w, h)
                          - 2.0 * bc.gamma * std::exp((bc.p - 1.0) * w.front());
    const double r_right = outward_derivative_right(w, h)
                           - 2.0 * bc.gamma * std::exp((bc.p - 1.0) * w.back());
    return {r_left, r_right};
}

namespace detail {

/// Collar bump used to repair boundary slopes: psi(s) = s^4 - s^3 on [0, 1],
/// zero for s <= 0.  psi and its first two derivatives vanish at s = 0 (smooth
/// join to the untouched bulk) and psi(1) = 0 with psi'(1) = 1, so adding a
/// multiple of psi adjusts the boundary slope of w without moving the boundary
/// value -- and therefore without moving the flux target it must match.
inline double collar_bump(double s) {
    if (s <= 0.0) return 0.0;
    return s * s * s * (s - 1.0);
}

/// Quadratic extrapolation of a nodal field to the wall from the three
/// nearest interior values (ordered nearest first).  O(h^3) on smooth
/// fields; used for wall curvature, where the ghost-row operator value is
/// one order less accurate than the interior.
inline double extrapolate_to_wall(double f1, double f2, double f3) {
    return 3.0 * f1 - 3.0 * f2 + f3;
}

}  // namespace detail

/// Perturb a positive profile inside boundary collars of width blend_width so
/// that the discrete compatibility residual vanishes, leaving the profile
/// untouched on |x| <= l - blend_width.
///
/// The correction is additive in w with the collar_bump shape; its amplitude
/// is fixed from the bump's own discrete one-sided derivative, so the repaired
/// residual is zero to machine precision on the given grid (not merely to a
/// truncation tolerance).
inline SolutionState make_compatible_initial_data(const std::vector<double>& profile,
                                                  const RobinBoundary& bc,
                                                  const Interval1D& dom,
                                                  double blend_width) {
    dom.validate();
    bc.validate();
    if (profile.size() != static_cast<std::size_t>(dom.n))
        throw std::invalid_argument("make_compatible_initial_data: profile/grid size mismatch");
    for (double v : profile)
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument("make_compatible_initial_data: profile must be strictly positive");
    if (!(blend_width < dom.l))
        throw std::invalid_argument("make_compatible_initial_data: blend_width must be smaller than l");
    const double h = dom.h();
    if (!(blend_width >= 3.0 * h))
        throw std::invalid_argument(
            "make_compatible_initial_data: blend_width must span at least three grid cells");

    const int n = dom.n;
    SolutionState out;
    out.t = 0.0;
    out.w.resize(profile.size());
    std::transform(profile.begin(), profile.end(), out.w.begin(),
                   [](double v) { return std::log(v); });

    // Right collar: raise the outward slope to the flux target.
    {
        std::vector<double> phi(out.w.size(), 0.0);
        for (int i = 0; i < n; ++i) {
            const double s = (dom.x(i) - (dom.l - blend_width)) / blend_width;
            phi[i] = blend_width * detail::collar_bump(s);
        }
        phi[n - 1] = 0.0;  // bump vanishes at the boundary node by construction
        const double slope = outward_derivative_right(out.w, h);
        const double target = 2.0 * bc.gamma * std::exp((bc.p - 1.0) * out.w[n - 1]);
        const double bump_slope = outward_derivative_right(phi, h);
        for (int i = 0; i < n; ++i) out.w[i] += (target - slope) / bump_slope * phi[i];
    }
    // Left collar, mirrored.
    {
        std::vector<double> phi(out.w.size(), 0.0);
        for (int i = 0; i < n; ++i) {
            const double s = (-dom.x(i) - (dom.l - blend_width)) / blend_width;
            phi[i] = blend_width * detail::collar_bump(s);
        }
        phi[0] = 0.0;
        const double slope = outward_derivative_left(out.w, h);
        const double target = 2.0 * bc.gamma * std::exp((bc.p - 1.0) * out.w[0]);
        const double bump_slope = outward_derivative_left(phi, h);
        for (int i = 0; i < n; ++i) out.w[i] += (target - slope) / bump_slope * phi[i];
    }
    return out;
}

}  // namespace logdiff
