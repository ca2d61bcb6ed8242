#pragma once

/// Ricci-flow dictionary for cylinder runs: the conformal factor u on
/// [-l, l] x S^1 defines the metric g = u g_E, and this header computes the
/// geometric quantities of that surface — scalar curvature R = -(Lap log u)/u,
/// area, boundary length, boundary average curvature, the Gauss-Bonnet
/// residual, the area-vs-length comparison, curvature envelopes — plus the
/// warped-product example metric dx^2 + f(x)^2 dtheta^2 and its conversion to
/// conformal data.
///
/// All discrete quantities reuse the solver's stencils (curvature_field calls
/// the same operator the time stepper integrates), so identities that are
/// exact for the discrete operator — e.g. the Gauss-Bonnet combination on the
/// cylinder — remain exact here instead of drifting by a different O(h^2).

#include "core.hpp"
#include "solver1d.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace logdiff {

/// Scalar curvature at every node: R_i = -(Lap log u)_i / u_i with the
/// solver's boundary rows, so R agrees with -(du/dt)/u exactly.
inline std::vector<double> curvature_field(const SolutionState& state, const RobinBoundary& bc,
                                           const Interval1D& dom) {
    std::vector<double> R = apply_log_diffusion(state, bc, dom);
    for (std::size_t i = 0; i < R.size(); ++i) R[i] = -R[i] / std::exp(state.w[i]);
    return R;
}

/// Riemannian area of the cylinder: integral of u over [-l,l] x [0,2pi).
inline double area(const SolutionState& state, const Interval1D& dom) {
    std::vector<double> u(state.w.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::exp(state.w[i]);
    return 2.0 * M_PI * trapezoid(u, dom.h());
}

/// Total length of the two boundary circles: ds_g = sqrt(u) ds_E.
inline double boundary_length(const SolutionState& state, const Interval1D& dom) {
    static_cast<void>(dom);
    return 2.0 * M_PI * (std::sqrt(std::exp(state.w.front())) + std::sqrt(std::exp(state.w.back())));
}

/// Gauss-Bonnet combination integral(R dA) + 2 integral(k ds) with the
/// discrete geodesic curvature k = gamma * u^(p-3/2) at the boundary nodes
/// (constant gamma when p = 3/2).  Zero for the continuum cylinder (Euler
/// characteristic 0); the discrete value telescopes to roundoff because both
/// terms reduce to the same boundary fluxes.
inline double gauss_bonnet_residual(const SolutionState& state, const RobinBoundary& bc,
                                    const Interval1D& dom) {
    const std::vector<double> lap = apply_log_diffusion(state, bc, dom);
    std::vector<double> Ru(lap.size());
    for (std::size_t i = 0; i < lap.size(); ++i) Ru[i] = -lap[i];  // R*u = -Lap(log u)
    const double gl = -2.0 * bc.gamma * std::exp((bc.p - 1.0) * state.w.front());
    const double gr = 2.0 * bc.gamma * std::exp((bc.p - 1.0) * state.w.back());
    return 2.0 * M_PI * trapezoid(Ru, dom.h()) + 2.0 * M_PI * (gr - gl);
}

/// Boundary average curvature: mean of R over the two boundary circles
/// weighted by their g-lengths.  Wall values are extrapolated from the three
/// nearest interior nodes, where the operator is an order more accurate than
/// in the ghost-eliminated wall rows.
inline double r_boundary(const SolutionState& state, const RobinBoundary& bc,
                         const Interval1D& dom) {
    const std::vector<double> R = curvature_field(state, bc, dom);
    const std::size_t n = R.size();
    const double Rl =
        n >= 5 ? detail::extrapolate_to_wall(R[1], R[2], R[3]) : R.front();
    const double Rr =
        n >= 5 ? detail::extrapolate_to_wall(R[n - 2], R[n - 3], R[n - 4]) : R.back();
    const double sl = std::sqrt(std::exp(state.w.front()));
    const double sr = std::sqrt(std::exp(state.w.back()));
    return (Rl * sl + Rr * sr) / (sl + sr);
}

/// Bundle of the per-state geometric quantities.
struct GeometricDiagnostics {
    std::vector<double> R;
    double R_min = 0.0;
    double R_max = 0.0;
    double A = 0.0;            ///< area, positive
    double L = 0.0;            ///< boundary length, positive
    double r_boundary = 0.0;   ///< boundary average curvature
    double gb_residual = 0.0;
};

inline GeometricDiagnostics geometric_diagnostics(const SolutionState& state,
                                                  const RobinBoundary& bc, const Interval1D& dom) {
    GeometricDiagnostics g;
    g.R = curvature_field(state, bc, dom);
    g.R_min = *std::min_element(g.R.begin(), g.R.end());
    g.R_max = *std::max_element(g.R.begin(), g.R.end());
    g.A = area(state, dom);
    g.L = boundary_length(state, dom);
    g.r_boundary = r_boundary(state, bc, dom);
    g.gb_residual = gauss_bonnet_residual(state, bc, dom);
    return g;
}

/// Outcome of the area-vs-length comparison A <= (2L/alpha) sinh(alpha*l),
/// valid for surfaces with R >= 0 and boundary curvature |k| <= alpha.
struct AreaLengthReport {
    bool applicable = false;  ///< preconditions held (R >= 0 up to -h^2, |k| <= alpha)
    bool holds = false;       ///< A <= (2L/alpha) sinh(alpha l)
    double slack = 0.0;       ///< (2L/alpha) sinh(alpha l) - A
};

inline AreaLengthReport area_length_check(const SolutionState& state, const RobinBoundary& bc,
                                          const Interval1D& dom, double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("area_length_check: alpha must be positive");
    AreaLengthReport rep;
    const std::vector<double> R = curvature_field(state, bc, dom);
    const double h = dom.h();
    const double R_tol = -h * h;  // allow discretization-sized negativity
    for (double r : R)
        if (r < R_tol) return rep;  // negative curvature: comparison not applicable
    const double k_left = bc.gamma * std::exp((bc.p - 1.5) * state.w.front());
    const double k_right = bc.gamma * std::exp((bc.p - 1.5) * state.w.back());
    if (std::abs(k_left) > alpha || std::abs(k_right) > alpha) return rep;
    rep.applicable = true;
    const double A = area(state, dom);
    const double L = boundary_length(state, dom);
    const double bound = 2.0 * L / alpha * std::sinh(alpha * dom.l);
    rep.holds = A <= bound;
    rep.slack = bound - A;
    return rep;
}

/// Upper envelope B/(1 - B t) for R_max along negative-curvature runs
/// (B < 0 is the initial curvature maximum; the envelope rises to 0).
inline double curvature_envelope(double B, double t) {
    if (!(B < 0.0)) throw std::invalid_argument("curvature_envelope: B must be negative");
    return B / (1.0 - B * t);
}

/// Warped-product metric dx^2 + f(x)^2 dtheta^2 on [-l, l] x S^1.
struct MetricProfile {
    std::function<double(double)> f;  ///< positive profile on [-l, l]
    double l = 0.0;                   ///< half-length in the arclength coordinate
};

namespace detail {

inline double example_f(double x) { return std::cos(x) - 0.25 * x * x; }
inline double example_fp(double x) { return -std::sin(x) - 0.5 * x; }
inline double example_fpp(double x) { return -std::cos(x) - 0.5; }
inline double example_fppp(double x) { return std::sin(x); }

}  // namespace detail

/// The positively-curved example profile f(x) = cos x - x^2/4 at the
/// half-length for which the run is performed.
inline MetricProfile example_profile() { return {detail::example_f, 0.74013}; }

/// Solve dR/dN = k R at x = l for the example profile (R = -2 f''/f scalar
/// curvature, k = f'(l)/f(l) boundary geodesic curvature, N the outward
/// normal), by bisection on (0.5, 1.0) to 1e-8.  This is the second-order
/// compatibility condition for curvature regularity at the corner.
///
/// Throws std::runtime_error when the bracket contains no sign change.  (For
/// this profile R' - kR is positive on the whole interval where f > 0 — R is
/// positive and increasing toward the boundary while k < 0 — so no root
/// exists; see the repository notes on the known-limitations list.)
inline double find_compatible_length() {
    auto G = [](double l) {
        const double f = detail::example_f(l);
        const double R = -2.0 * detail::example_fpp(l) / f;
        const double Rp = -2.0 * detail::example_fppp(l) / f +
                          2.0 * detail::example_fpp(l) * detail::example_fp(l) / (f * f);
        const double k = detail::example_fp(l) / f;
        return Rp - k * R;
    };
    double a = 0.5, b = 1.0;
    double Ga = G(a), Gb = G(b);
    if (Ga == 0.0) return a;
    if (Gb == 0.0) return b;
    if ((Ga < 0.0) == (Gb < 0.0))
        throw std::runtime_error(
            "find_compatible_length: no sign change of dR/dN - kR in (0.5, 1.0)");
    while (b - a > 1e-8) {
        const double m = 0.5 * (a + b);
        const double Gm = G(m);
        if (Gm == 0.0) return m;
        if ((Gm < 0.0) == (Ga < 0.0)) {
            a = m;
            Ga = Gm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

/// Conformal data produced from a warped-product profile.
struct ConformalData {
    SolutionState state;  ///< u = f^2 on the uniform conformal grid, t = 0
    Interval1D dom;       ///< conformal interval [-l_c, l_c]
    double gamma = 0.0;   ///< boundary geodesic curvature f'(l)/f(l); the flux
                          ///< coefficient for p = 3/2
};

/// Convert dx^2 + f^2 dtheta^2 into u g_E: the conformal coordinate s solves
/// ds/dx = 1/f with s(0) = 0, and u(s) = f(x(s))^2.  x(s) is integrated by
/// classical RK4 on dx/ds = f(x) with fine substeps, outward from the center
/// in both directions.  The profile's derivative for gamma is taken by
/// central difference (the profile is only available as a callable).
inline ConformalData profile_to_conformal(const MetricProfile& mp, int n) {
    if (!(mp.l > 0.0)) throw std::invalid_argument("profile_to_conformal: l must be positive");
    if (n < 3) throw std::invalid_argument("profile_to_conformal: need n >= 3");
    // Half-length of the conformal interval: l_c = integral_0^l dx / f(x),
    // by composite Simpson on a fine grid (f is smooth).
    const int m = 4096;
    const double hx = mp.l / m;
    double lc = 0.0;
    for (int i = 0; i < m; ++i) {
        const double x0 = i * hx, x1 = (i + 1) * hx;
        const double f0 = mp.f(x0), fm = mp.f(0.5 * (x0 + x1)), f1 = mp.f(x1);
        if (!(f0 > 0.0) || !(fm > 0.0) || !(f1 > 0.0))
            throw std::invalid_argument("profile_to_conformal: profile must be positive");
        lc += hx / 6.0 * (1.0 / f0 + 4.0 / fm + 1.0 / f1);
    }

    ConformalData out;
    out.dom = Interval1D{lc, n};
    out.state.t = 0.0;
    out.state.w.assign(static_cast<std::size_t>(n), 0.0);
    const int mid = (n - 1) / 2;  // s = 0 falls on a node for odd n
    const bool node_centered = (n % 2 == 1);
    // March x(s) away from s = 0 with RK4 substeps per grid interval.
    auto march = [&](double s_from, double x_from, double s_to) {
        const int sub = 64;
        const double ds = (s_to - s_from) / sub;
        double x = x_from;
        for (int j = 0; j < sub; ++j) {
            const double k1 = mp.f(x);
            const double k2 = mp.f(x + 0.5 * ds * k1);
            const double k3 = mp.f(x + 0.5 * ds * k2);
            const double k4 = mp.f(x + ds * k3);
            x += ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        return x;
    };
    std::vector<double> xs(static_cast<std::size_t>(n));
    if (node_centered) {
        xs[mid] = 0.0;
        for (int i = mid + 1; i < n; ++i) xs[i] = march(out.dom.x(i - 1), xs[i - 1], out.dom.x(i));
        for (int i = mid - 1; i >= 0; --i) xs[i] = march(out.dom.x(i + 1), xs[i + 1], out.dom.x(i));
    } else {
        // Even n: start both halves from s = 0 between the two middle nodes.
        xs[mid] = march(0.0, 0.0, out.dom.x(mid));
        xs[mid + 1] = march(0.0, 0.0, out.dom.x(mid + 1));
        for (int i = mid + 2; i < n; ++i) xs[i] = march(out.dom.x(i - 1), xs[i - 1], out.dom.x(i));
        for (int i = mid - 1; i >= 0; --i) xs[i] = march(out.dom.x(i + 1), xs[i + 1], out.dom.x(i));
    }
    for (int i = 0; i < n; ++i) {
        const double fi = mp.f(xs[i]);
        if (!(fi > 0.0)) throw std::invalid_argument("profile_to_conformal: profile must be positive");
        out.state.w[static_cast<std::size_t>(i)] = 2.0 * std::log(fi);
    }
    const double dfl = 1e-6;
    const double fl = mp.f(mp.l);
    out.gamma = (mp.f(mp.l + dfl) - mp.f(mp.l - dfl)) / (2.0 * dfl) / fl;
    return out;
}

}  // namespace logdiff
