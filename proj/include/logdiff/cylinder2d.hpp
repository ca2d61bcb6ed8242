#pragma once

/// Full two-variable solver on [-l, l] x S^1 for du/dt = Lap(log u) with the
/// time- and angle-dependent boundary curvature condition
///     du/dN = 2 phi(side, theta, t) u^(3/2),
/// whose exponent makes the boundary geodesic curvature equal phi exactly.
/// Used to probe long-time existence empirically: a 2D run is sandwiched
/// between two theta-independent 1D runs driven by the extreme values of phi
/// (the comparison-principle construction), and the sandwich is checked
/// nodewise at every output time.
///
/// Discretization: 5-point Laplacian of w = log u, periodic in theta, ghost
/// elimination through the flux condition at the x-walls.  The implicit step
/// reuses the damped-Newton loop; the linear systems (x-tridiagonal plus
/// periodic theta coupling) are solved by BiCGSTAB preconditioned with
/// tridiagonal solves along each theta-line.  Everything is single-threaded
/// and free of iteration-order ambiguity, so reruns are bitwise identical.

#include "core.hpp"
#include "solver1d.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace logdiff {

/// Uniform tensor grid on [-l, l] x [0, 2pi).  Nodes are flattened
/// theta-major: index(i, j) = j*nx + i, so each theta-line is contiguous.
struct CylinderGrid {
    double l = 1.0;   ///< half-length, positive
    int nx = 33;      ///< axial nodes including both walls, at least 3
    int ntheta = 16;  ///< angular nodes (node ntheta wraps to node 0), at least 4

    double hx() const { return 2.0 * l / static_cast<double>(nx - 1); }
    double htheta() const { return 2.0 * M_PI / static_cast<double>(ntheta); }
    double x(int i) const { return -l + static_cast<double>(i) * hx(); }
    double theta(int j) const { return static_cast<double>(j) * htheta(); }
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) +
               static_cast<std::size_t>(i);
    }
    std::size_t size() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ntheta);
    }

    void validate() const {
        if (!(l > 0.0)) throw std::invalid_argument("CylinderGrid: half-length must be positive");
        if (nx < 3) throw std::invalid_argument("CylinderGrid: need at least 3 axial nodes");
        if (ntheta < 4) throw std::invalid_argument("CylinderGrid: need at least 4 angular nodes");
    }
};

/// Prescribed boundary geodesic curvature phi(side, theta, t), side being the
/// wall coordinate -l or +l, together with its range over the run horizon
/// (used to build the 1D comparison envelopes; the comparison argument needs
/// phi_min <= phi <= phi_max on [0, t_final]).
struct BoundaryCurvature {
    std::function<double(double side, double theta, double t)> phi;
    double phi_min = 0.0;
    double phi_max = 0.0;

    void validate() const {
        if (!phi) throw std::invalid_argument("BoundaryCurvature: phi must be callable");
        if (!(phi_min <= phi_max))
            throw std::invalid_argument("BoundaryCurvature: phi_min must not exceed phi_max");
    }
};

/// The 2D problem, shaped for the shared Newton/adaptive machinery.  States
/// are SolutionState with the flattened w field.
class CylinderProblem {
public:
    CylinderProblem(CylinderGrid grid, BoundaryCurvature phi)
        : grid_(grid), phi_(std::move(phi)) {
        grid_.validate();
        phi_.validate();
    }

    const CylinderGrid& grid() const { return grid_; }
    const BoundaryCurvature& phi() const { return phi_; }
    std::size_t size() const { return grid_.size(); }

    /// Target outward slope of w at a wall node: dw/dN = 2 phi u^(1/2).
    double wall_outward_slope(double side, int j, double t, double w_wall) const {
        return 2.0 * phi_.phi(side, grid_.theta(j), t) * std::exp(0.5 * w_wall);
    }

    /// 5-point Laplacian of w, periodic in theta, flux ghost rows in x.
    void apply_operator(const std::vector<double>& w, double t, std::vector<double>& out) const {
        const int nx = grid_.nx, nt = grid_.ntheta;
        const double ax = 1.0 / (grid_.hx() * grid_.hx());
        const double at = 1.0 / (grid_.htheta() * grid_.htheta());
        out.resize(w.size());
        for (int j = 0; j < nt; ++j) {
            const std::size_t row = grid_.index(0, j);
            const std::size_t up = grid_.index(0, (j + 1) % nt);
            const std::size_t dn = grid_.index(0, (j + nt - 1) % nt);
            for (int i = 0; i < nx; ++i) {
                const double wc = w[row + static_cast<std::size_t>(i)];
                const double th = w[up + static_cast<std::size_t>(i)] - 2.0 * wc +
                                  w[dn + static_cast<std::size_t>(i)];
                double xx;
                if (i == 0) {
                    const double g = wall_outward_slope(-grid_.l, j, t, wc);
                    // outward normal is -x: dw/dx(-l) = -g
                    xx = 2.0 * (w[row + 1] - wc) * ax - 2.0 * (-g) / grid_.hx();
                } else if (i == nx - 1) {
                    const double g = wall_outward_slope(grid_.l, j, t, wc);
                    xx = 2.0 * (w[row + static_cast<std::size_t>(nx - 2)] - wc) * ax +
                         2.0 * g / grid_.hx();
                } else {
                    xx = (w[row + static_cast<std::size_t>(i - 1)] - 2.0 * wc +
                          w[row + static_cast<std::size_t>(i + 1)]) *
                         ax;
                }
                out[row + static_cast<std::size_t>(i)] = xx + th * at;
            }
        }
    }

    void rhs(const std::vector<double>& w, double t, std::vector<double>& out) const {
        apply_operator(w, t, out);
    }

    /// Newton matrix-vector product: (diag(e^w/dt) - dL/dw) v.
    void jacobian_product(const std::vector<double>& w, double t, double dt,
                          const std::vector<double>& v, std::vector<double>& out) const {
        const int nx = grid_.nx, nt = grid_.ntheta;
        const double ax = 1.0 / (grid_.hx() * grid_.hx());
        const double at = 1.0 / (grid_.htheta() * grid_.htheta());
        out.resize(v.size());
        for (int j = 0; j < nt; ++j) {
            const std::size_t row = grid_.index(0, j);
            const std::size_t up = grid_.index(0, (j + 1) % nt);
            const std::size_t dn = grid_.index(0, (j + nt - 1) % nt);
            for (int i = 0; i < nx; ++i) {
                const std::size_t c = row + static_cast<std::size_t>(i);
                const double vth = v[up + static_cast<std::size_t>(i)] - 2.0 * v[c] +
                                   v[dn + static_cast<std::size_t>(i)];
                double vxx;
                if (i == 0) {
                    // d/dw of the flux term -2(-g)/hx with g = 2 phi e^{w/2}:
                    // +2*phi*e^{w/2}/hx * ... : dg/dw = phi e^{w/2} = g/2.
                    const double g = wall_outward_slope(-grid_.l, j, t, w[c]);
                    vxx = 2.0 * (v[row + 1] - v[c]) * ax + (g / grid_.hx()) * v[c];
                } else if (i == nx - 1) {
                    const double g = wall_outward_slope(grid_.l, j, t, w[c]);
                    vxx = 2.0 * (v[row + static_cast<std::size_t>(nx - 2)] - v[c]) * ax +
                          (g / grid_.hx()) * v[c];
                } else {
                    vxx = (v[c - 1] - 2.0 * v[c] + v[c + 1]) * ax;
                }
                out[c] = std::exp(w[c]) / dt * v[c] - (vxx + vth * at);
            }
        }
    }

    /// Line preconditioner: solve, for each theta-line, the tridiagonal part
    /// of the Newton matrix (x-coupling plus the full diagonal including the
    /// theta contribution 2/htheta^2).
    void precondition(const std::vector<double>& w, double t, double dt,
                      const std::vector<double>& r, std::vector<double>& out) const {
        const int nx = grid_.nx, nt = grid_.ntheta;
        const double ax = 1.0 / (grid_.hx() * grid_.hx());
        const double at = 1.0 / (grid_.htheta() * grid_.htheta());
        out = r;
        std::vector<double> dl(static_cast<std::size_t>(nx - 1));
        std::vector<double> d(static_cast<std::size_t>(nx));
        std::vector<double> du(static_cast<std::size_t>(nx - 1));
        std::vector<double> b(static_cast<std::size_t>(nx));
        for (int j = 0; j < nt; ++j) {
            const std::size_t row = grid_.index(0, j);
            for (int i = 0; i < nx; ++i) {
                const std::size_t c = row + static_cast<std::size_t>(i);
                d[static_cast<std::size_t>(i)] = std::exp(w[c]) / dt + 2.0 * ax + 2.0 * at;
                b[static_cast<std::size_t>(i)] = r[c];
            }
            for (int i = 0; i + 1 < nx; ++i) {
                dl[static_cast<std::size_t>(i)] = -ax;
                du[static_cast<std::size_t>(i)] = -ax;
            }
            du[0] = -2.0 * ax;
            dl[static_cast<std::size_t>(nx - 2)] = -2.0 * ax;
            {
                const std::size_t cl = row;
                const std::size_t cr = row + static_cast<std::size_t>(nx - 1);
                d[0] += wall_outward_slope(-grid_.l, j, t, w[cl]) / grid_.hx();
                d[static_cast<std::size_t>(nx - 1)] +=
                    wall_outward_slope(grid_.l, j, t, w[cr]) / grid_.hx();
            }
            if (!detail::solve_tridiagonal(dl, d, du, b)) {
                // Singular line system: fall back to the identity on this line.
                for (int i = 0; i < nx; ++i)
                    b[static_cast<std::size_t>(i)] = r[row + static_cast<std::size_t>(i)];
            }
            for (int i = 0; i < nx; ++i) out[row + static_cast<std::size_t>(i)] =
                b[static_cast<std::size_t>(i)];
        }
    }

    /// Damped Newton with a BiCGSTAB inner solve, mirroring the tridiagonal
    /// variant's acceptance rules (monotone residual decrease, small-update
    /// convergence, overflow guard).
    detail::NewtonResult solve_implicit(const std::vector<double>& w_old, double dt, double t_new,
                                        const SolverConfig& cfg) const {
        const std::size_t n = w_old.size();
        detail::NewtonResult res;
        res.w = w_old;
        std::vector<double> u_old(n);
        for (std::size_t i = 0; i < n; ++i) u_old[i] = std::exp(w_old[i]);

        std::vector<double> f(n), f_try(n), w_try(n), dw(n);
        auto residual = [&](const std::vector<double>& w, std::vector<double>& out) -> bool {
            rhs(w, t_new, out);
            double m = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                out[i] = (std::exp(w[i]) - u_old[i]) / dt - out[i];
                m = std::max(m, std::abs(out[i]));
            }
            return std::isfinite(m);
        };
        if (!residual(res.w, f)) return res;
        double f_norm = 0.0;
        for (double v : f) f_norm = std::max(f_norm, std::abs(v));

        for (int iter = 1; iter <= cfg.newton_max_iter; ++iter) {
            res.iterations = iter;
            if (!bicgstab(res.w, t_new, dt, f, dw)) return res;
            double update_norm = 0.0;
            for (double v : dw) {
                if (!std::isfinite(v)) return res;
                update_norm = std::max(update_norm, std::abs(v));
            }
            if (update_norm <= cfg.newton_tol) {
                for (std::size_t i = 0; i < n; ++i) res.w[i] += dw[i];
                res.converged = true;
                return res;
            }
            double step = 1.0;
            bool improved = false;
            for (int back = 0; back < 14; ++back) {
                bool in_range = true;
                for (std::size_t i = 0; i < n; ++i) {
                    w_try[i] = res.w[i] + step * dw[i];
                    if (std::abs(w_try[i]) >= detail::kLogOverflowGuard) {
                        in_range = false;
                        break;
                    }
                }
                if (in_range && residual(w_try, f_try)) {
                    double m = 0.0;
                    for (double v : f_try) m = std::max(m, std::abs(v));
                    if (m <= f_norm * (1.0 - 0.25 * step) + std::numeric_limits<double>::min()) {
                        res.w.swap(w_try);
                        f.swap(f_try);
                        f_norm = m;
                        improved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if (!improved) return res;
            if (step * update_norm <= cfg.newton_tol) {
                res.converged = true;
                return res;
            }
        }
        return res;
    }

    /// Geometric diagnostics.  Mass equals area (the theta direction is
    /// explicit here, no 2*pi factor); the rectangle rule in theta is exact
    /// for the periodic direction, trapezoid in x as elsewhere.
    DiagnosticsRow diagnostics(const std::vector<double>& w, double t,
                               const std::vector<double>& lap) const {
        const int nx = grid_.nx, nt = grid_.ntheta;
        const double ht = grid_.htheta();
        const double hx = grid_.hx();
        DiagnosticsRow row;
        row.t = t;
        row.u_min = std::numeric_limits<double>::infinity();
        row.u_max = -std::numeric_limits<double>::infinity();
        row.R_min = std::numeric_limits<double>::infinity();
        row.R_max = -std::numeric_limits<double>::infinity();
        row.lap_w_interior_min = std::numeric_limits<double>::infinity();
        row.lap_w_interior_max = -std::numeric_limits<double>::infinity();
        double mass = 0.0, lap_int = 0.0, len_l = 0.0, len_r = 0.0;
        double k_ds = 0.0, R_ds = 0.0;
        for (int j = 0; j < nt; ++j) {
            const std::size_t base = grid_.index(0, j);
            double mline = 0.0, lline = 0.0;
            for (int i = 0; i < nx; ++i) {
                const std::size_t c = base + static_cast<std::size_t>(i);
                const double u = std::exp(w[c]);
                const double R = -lap[c] / u;
                row.u_min = std::min(row.u_min, u);
                row.u_max = std::max(row.u_max, u);
                row.R_min = std::min(row.R_min, R);
                row.R_max = std::max(row.R_max, R);
                const double wt = (i == 0 || i == nx - 1) ? 0.5 : 1.0;
                mline += wt * u;
                lline += wt * lap[c];
                if (i > 0 && i < nx - 1) {
                    row.lap_w_interior_min = std::min(row.lap_w_interior_min, lap[c]);
                    row.lap_w_interior_max = std::max(row.lap_w_interior_max, lap[c]);
                }
            }
            mass += mline * hx;
            lap_int += lline * hx;
            const std::size_t cl = base;
            const std::size_t cr = base + static_cast<std::size_t>(nx - 1);
            const double sql = std::sqrt(std::exp(w[cl]));
            const double sqr = std::sqrt(std::exp(w[cr]));
            len_l += sql;
            len_r += sqr;
            const double phi_l = phi_.phi(-grid_.l, grid_.theta(j), t);
            const double phi_r = phi_.phi(grid_.l, grid_.theta(j), t);
            k_ds += phi_l * sql + phi_r * sqr;  // k = phi exactly at p = 3/2
            // Wall curvature extrapolated from the interior of the line
            // (wall rows carry an O(hx) truncation term).
            auto R_at = [&](std::size_t c) { return -lap[c] / std::exp(w[c]); };
            double R_wl = R_at(cl), R_wr = R_at(cr);
            if (nx >= 5) {
                R_wl = detail::extrapolate_to_wall(R_at(cl + 1), R_at(cl + 2), R_at(cl + 3));
                R_wr = detail::extrapolate_to_wall(R_at(cr - 1), R_at(cr - 2), R_at(cr - 3));
            }
            R_ds += R_wl * sql + R_wr * sqr;
        }
        row.mass = mass * ht;
        row.area = row.mass;
        row.length = (len_l + len_r) * ht;
        row.gb_residual = -lap_int * ht + 2.0 * k_ds * ht;
        row.boundary_flux = 2.0 * k_ds * ht;
        row.r_boundary = R_ds * ht / row.length;
        return row;
    }

    DiagnosticsRow diagnostics(const std::vector<double>& w, double t) const {
        std::vector<double> lap;
        apply_operator(w, t, lap);
        return diagnostics(w, t, lap);
    }

private:
    /// Left-preconditioned BiCGSTAB for (diag(e^w/dt) - dL/dw) dw = -f.
    /// Deterministic: fixed initial guess, fixed reduction order, no
    /// randomized shadow vector.  Returns false on breakdown or stagnation.
    bool bicgstab(const std::vector<double>& w, double t, double dt, const std::vector<double>& f,
                  std::vector<double>& x) const {
        const std::size_t n = f.size();
        auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
            return s;
        };
        std::vector<double> r(n), r0(n), p(n, 0.0), v(n, 0.0), s(n), t2(n), tmp(n);
        x.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = -f[i];
        precondition(w, t, dt, tmp, r);
        r0 = r;
        const double b_norm = std::sqrt(dot(r, r));
        if (b_norm == 0.0) return true;
        const double tol = 1e-12 * b_norm;
        double rho = 1.0, alpha = 1.0, omega = 1.0;
        for (int it = 0; it < 600; ++it) {
            const double rho1 = dot(r0, r);
            if (!std::isfinite(rho1) || std::abs(rho1) < 1e-300) return false;
            if (it == 0) {
                p = r;
            } else {
                const double beta = (rho1 / rho) * (alpha / omega);
                for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            jacobian_product(w, t, dt, p, tmp);
            precondition(w, t, dt, tmp, v);
            const double r0v = dot(r0, v);
            if (!std::isfinite(r0v) || std::abs(r0v) < 1e-300) return false;
            alpha = rho1 / r0v;
            for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
            if (std::sqrt(dot(s, s)) <= tol) {
                for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
                return true;
            }
            jacobian_product(w, t, dt, s, tmp);
            precondition(w, t, dt, tmp, t2);
            const double t2t2 = dot(t2, t2);
            if (!(t2t2 > 0.0) || !std::isfinite(t2t2)) return false;
            omega = dot(t2, s) / t2t2;
            if (!std::isfinite(omega) || omega == 0.0) return false;
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += alpha * p[i] + omega * s[i];
                r[i] = s[i] - omega * t2[i];
            }
            if (std::sqrt(dot(r, r)) <= tol) return true;
            rho = rho1;
        }
        return false;
    }

    CylinderGrid grid_;
    BoundaryCurvature phi_;
};

/// du/dt field for a 2D state.
inline std::vector<double> apply_log_diffusion_2d(const SolutionState& state,
                                                  const BoundaryCurvature& phi,
                                                  const CylinderGrid& grid) {
    std::vector<double> lap;
    CylinderProblem(grid, phi).apply_operator(state.w, state.t, lap);
    return lap;
}

/// Worst outward-slope mismatch over each wall at t = 0: {left, right}.
inline std::pair<double, double> cylinder_compatibility_residual(const SolutionState& state,
                                                                 const BoundaryCurvature& phi,
                                                                 const CylinderGrid& grid) {
    grid.validate();
    if (state.w.size() != grid.size())
        throw std::invalid_argument("cylinder_compatibility_residual: state size mismatch");
    const double hx = grid.hx();
    double worst_l = 0.0, worst_r = 0.0;
    std::vector<double> line(static_cast<std::size_t>(grid.nx));
    for (int j = 0; j < grid.ntheta; ++j) {
        for (int i = 0; i < grid.nx; ++i) line[static_cast<std::size_t>(i)] =
            state.w[grid.index(i, j)];
        const double gl = outward_derivative_left(line, hx) -
                          2.0 * phi.phi(-grid.l, grid.theta(j), state.t) *
                              std::exp(0.5 * line.front());
        const double gr = outward_derivative_right(line, hx) -
                          2.0 * phi.phi(grid.l, grid.theta(j), state.t) *
                              std::exp(0.5 * line.back());
        if (std::abs(gl) > std::abs(worst_l)) worst_l = gl;
        if (std::abs(gr) > std::abs(worst_r)) worst_r = gr;
    }
    return {worst_l, worst_r};
}

/// Collar-blend every theta-line so the discrete wall slopes match
/// 2 phi(side, theta, 0) u^(1/2) exactly; wall values are unchanged.
inline SolutionState make_compatible_cylinder_data(const std::vector<double>& profile,
                                                   const BoundaryCurvature& phi,
                                                   const CylinderGrid& grid, double blend_width) {
    grid.validate();
    phi.validate();
    if (profile.size() != grid.size())
        throw std::invalid_argument("make_compatible_cylinder_data: profile size mismatch");
    for (double v : profile)
        if (!(v > 0.0))
            throw std::invalid_argument("make_compatible_cylinder_data: profile must be positive");
    const double hx = grid.hx();
    if (!(blend_width >= 3.0 * hx))
        throw std::invalid_argument("make_compatible_cylinder_data: blend_width must be >= 3hx");
    if (!(blend_width < grid.l))
        throw std::invalid_argument(
            "make_compatible_cylinder_data: blend_width must be < half-length");

    SolutionState state;
    state.t = 0.0;
    state.w.resize(profile.size());
    for (std::size_t c = 0; c < profile.size(); ++c) state.w[c] = std::log(profile[c]);

    const int nx = grid.nx;
    std::vector<double> bump_r(static_cast<std::size_t>(nx), 0.0);
    std::vector<double> bump_l(static_cast<std::size_t>(nx), 0.0);
    for (int i = 0; i < nx; ++i) {
        bump_r[static_cast<std::size_t>(i)] =
            detail::collar_bump((grid.x(i) - (grid.l - blend_width)) / blend_width);
        bump_l[static_cast<std::size_t>(i)] =
            detail::collar_bump((-(grid.x(i)) - (grid.l - blend_width)) / blend_width);
    }
    const double br_slope = outward_derivative_right(bump_r, hx);
    const double bl_slope = outward_derivative_left(bump_l, hx);

    std::vector<double> line(static_cast<std::size_t>(nx));
    for (int j = 0; j < grid.ntheta; ++j) {
        for (int i = 0; i < nx; ++i) line[static_cast<std::size_t>(i)] =
            state.w[grid.index(i, j)];
        const double tgt_r =
            2.0 * phi.phi(grid.l, grid.theta(j), 0.0) * std::exp(0.5 * line.back());
        const double amp_r = (tgt_r - outward_derivative_right(line, hx)) / br_slope;
        for (int i = 0; i < nx; ++i) line[static_cast<std::size_t>(i)] +=
            amp_r * bump_r[static_cast<std::size_t>(i)];
        const double tgt_l =
            2.0 * phi.phi(-grid.l, grid.theta(j), 0.0) * std::exp(0.5 * line.front());
        const double amp_l = (tgt_l - outward_derivative_left(line, hx)) / bl_slope;
        for (int i = 0; i < nx; ++i) {
            line[static_cast<std::size_t>(i)] += amp_l * bump_l[static_cast<std::size_t>(i)];
            state.w[grid.index(i, j)] = line[static_cast<std::size_t>(i)];
        }
    }
    return state;
}

/// A 2D run together with its 1D comparison envelopes.
struct CylinderRunReport {
    Trajectory traj;       ///< the 2D run (samples hold flattened states)
    Trajectory upper;      ///< theta-independent 1D run with gamma = max phi
    Trajectory lower;      ///< theta-independent 1D run with gamma = min phi
    bool envelope_ok = false;     ///< sandwich held at all common output times
    double worst_upper_slack = 0.0;  ///< min over times/nodes of (upper - max_theta u)
    double worst_lower_slack = 0.0;  ///< min over times/nodes of (min_theta u - lower)
};

/// Run the 2D problem and its comparison envelopes.  The envelopes are
/// built by blending constant profiles (scaled until they bracket u0
/// nodewise) to compatibility with gamma+ = max phi and gamma- = min phi;
/// the flux ordering 2*gamma-*s^(3/2) <= 2*phi*s^(3/2) <= 2*gamma+*s^(3/2)
/// holds for every state value s > 0, which is what the comparison principle
/// needs.  The sandwich is then checked nodewise at every output time the
/// runs share.
inline CylinderRunReport run_cylinder(const SolutionState& u0, const BoundaryCurvature& phi,
                                      const CylinderGrid& grid, const SolverConfig& cfg,
                                      double t_final, std::vector<double> output_times = {}) {
    grid.validate();
    phi.validate();
    {
        auto [rl, rr] = cylinder_compatibility_residual(u0, phi, grid);
        if (!(std::abs(rl) < 1e-6 && std::abs(rr) < 1e-6))
            throw std::invalid_argument(
                "run_cylinder: initial data violates the compatibility condition");
    }
    const int nx = grid.nx;
    // Per-x extremes of the 2D initial data, for bracketing.
    std::vector<double> u0_max(static_cast<std::size_t>(nx), 0.0);
    std::vector<double> u0_min(static_cast<std::size_t>(nx),
                               std::numeric_limits<double>::infinity());
    for (int j = 0; j < grid.ntheta; ++j)
        for (int i = 0; i < nx; ++i) {
            const double u = std::exp(u0.w[grid.index(i, j)]);
            u0_max[static_cast<std::size_t>(i)] = std::max(u0_max[static_cast<std::size_t>(i)], u);
            u0_min[static_cast<std::size_t>(i)] = std::min(u0_min[static_cast<std::size_t>(i)], u);
        }
    const double glob_max = *std::max_element(u0_max.begin(), u0_max.end());
    const double glob_min = *std::min_element(u0_min.begin(), u0_min.end());

    const Interval1D dom1{grid.l, nx};
    const RobinBoundary bc_up{phi.phi_max, 1.5};
    const RobinBoundary bc_lo{phi.phi_min, 1.5};
    const double bw = std::max(3.0 * grid.hx(), 0.25 * grid.l);

    auto bracket = [&](double c, const RobinBoundary& bc, bool above) -> SolutionState {
        for (int attempt = 0; attempt < 8; ++attempt) {
            SolutionState s =
                make_compatible_initial_data(std::vector<double>(static_cast<std::size_t>(nx), c),
                                             bc, dom1, bw);
            bool ok = true;
            for (int i = 0; i < nx; ++i) {
                const double v = std::exp(s.w[static_cast<std::size_t>(i)]);
                if (above ? !(v > u0_max[static_cast<std::size_t>(i)])
                          : !(v < u0_min[static_cast<std::size_t>(i)])) {
                    ok = false;
                    break;
                }
            }
            if (ok) return s;
            c *= above ? 1.3 : 0.7;
        }
        throw std::runtime_error("run_cylinder: could not bracket the initial data");
    };
    const SolutionState up0 = bracket(1.3 * glob_max, bc_up, true);
    const SolutionState lo0 = bracket(0.7 * glob_min, bc_lo, false);

    CylinderRunReport rep;
    rep.traj = integrate_adaptive(CylinderProblem(grid, phi), u0, cfg, t_final, output_times);
    rep.upper = run(up0, bc_up, dom1, cfg, t_final, output_times);
    rep.lower = run(lo0, bc_lo, dom1, cfg, t_final, output_times);

    rep.worst_upper_slack = std::numeric_limits<double>::infinity();
    rep.worst_lower_slack = std::numeric_limits<double>::infinity();
    const std::size_t common = std::min({rep.traj.samples.size(), rep.upper.samples.size(),
                                         rep.lower.samples.size()});
    for (std::size_t k = 0; k < common; ++k) {
        const SolutionState& s2 = rep.traj.samples[k];
        const SolutionState& su = rep.upper.samples[k];
        const SolutionState& sl = rep.lower.samples[k];
        if (s2.t != su.t || s2.t != sl.t) break;  // past a termination mismatch
        for (int i = 0; i < nx; ++i) {
            double mx = -std::numeric_limits<double>::infinity();
            double mn = std::numeric_limits<double>::infinity();
            for (int j = 0; j < grid.ntheta; ++j) {
                const double u = std::exp(s2.w[grid.index(i, j)]);
                mx = std::max(mx, u);
                mn = std::min(mn, u);
            }
            rep.worst_upper_slack = std::min(
                rep.worst_upper_slack, std::exp(su.w[static_cast<std::size_t>(i)]) - mx);
            rep.worst_lower_slack = std::min(
                rep.worst_lower_slack, mn - std::exp(sl.w[static_cast<std::size_t>(i)]));
        }
    }
    rep.envelope_ok = rep.worst_upper_slack >= -1e-6 && rep.worst_lower_slack >= -1e-6;
    return rep;
}

}  // namespace logdiff
