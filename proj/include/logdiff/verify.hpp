#pragma once

/// Built-in verification battery behind `verify [--quick]`.
///
/// The battery re-derives the solver's key guarantees from scratch on every
/// invocation: convergence orders against a manufactured solution with a
/// prescribed source and boundary flux, a closed-form blow-down oracle, the
/// exact discrete conservation and Gauss-Bonnet identities, the disc
/// stencil's quadratic truncation scaling, agreement of the 2D solver with
/// the 1D solver on rotation-invariant data, and bitwise determinism of a
/// repeated run.  Quick mode trims grid sizes and drops the two slowest
/// items; it is a smoke screen, not a substitute for the full battery.
///
/// FaultInjection::stencil_offset deliberately adds an O(h) term to the
/// manufactured source so the test suite can confirm the battery actually
/// turns red when the scheme's order is broken (a verification battery that
/// cannot fail verifies nothing).

#include "runner.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace logdiff {

enum class FaultInjection {
    none,
    stencil_offset,  ///< corrupt the manufactured source by an O(h) term
};

struct VerifyItem {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace detail {

/// Max-norm error at t_final of a fixed-step run against the manufactured
/// solution u*(x, t) = 2 + sin(pi x) e^{-t} on [-1, 1], which exercises the
/// interior stencil, the time integrator, and the prescribed-slope boundary
/// path together.
inline double manufactured_error(int n, double dt, double t_final, FaultInjection fault) {
    const double pi = std::acos(-1.0);
    const Interval1D dom{1.0, n};
    const double h = dom.h();
    auto exact = [pi](double x, double t) { return 2.0 + std::sin(pi * x) * std::exp(-t); };
    SourceTerm src = [pi, h, fault](double x, double t) {
        const double u = 2.0 + std::sin(pi * x) * std::exp(-t);
        const double s = std::sin(pi * x) * std::exp(-t);
        const double c = pi * std::cos(pi * x) * std::exp(-t);
        double f = -s + pi * pi * s / u + c * c / (u * u);
        if (fault == FaultInjection::stencil_offset) f += 0.5 * h * x;
        return f;
    };
    BoundarySlopes slopes = [pi](double t) {
        // sin(+-pi) = 0, so u = 2 at both walls and d(log u)/dx = -pi e^{-t}/2.
        const double g = -pi * std::exp(-t) / 2.0;
        return std::pair<double, double>(g, g);
    };
    SolutionState u0;
    u0.t = 0.0;
    u0.w.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) u0.w[i] = std::log(exact(dom.x(i), 0.0));
    SolverConfig cfg;
    cfg.dt_init = dt;
    cfg.dt_max = dt;
    const RobinBoundary unused{0.0, 1.0};  // inert: the slopes override the flux law
    const Trajectory traj = run(u0, unused, dom, cfg, t_final, {}, src, slopes);
    const SolutionState& fin = traj.samples.back();
    double err = 0.0;
    for (int i = 0; i < n; ++i)
        err = std::max(err, std::abs(std::exp(fin.w[i]) - exact(dom.x(i), t_final)));
    return err;
}

/// Blow-down oracle u(x, t) = 2c^2 (T - t) sech^2(cx) with c = T = 1: an
/// exact solution whose flux matches the power law with p = 1 and
/// gamma = -tanh(1), vanishing uniformly at t = T = 1.
inline Trajectory sech2_trajectory(int n) {
    const Interval1D dom{1.0, n};
    RobinBoundary bc;
    bc.gamma = -std::tanh(1.0);
    bc.p = 1.0;
    std::vector<double> prof(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double ch = std::cosh(dom.x(i));
        prof[i] = 2.0 / (ch * ch);
    }
    // The continuous data is exactly compatible; the collar blend only
    // removes the one-sided stencil's O(h^2) discretization residual.
    const SolutionState u0 = make_compatible_initial_data(prof, bc, dom, 0.25);
    SolverConfig cfg;
    cfg.dt_init = 1e-4;
    cfg.dt_max = 5e-3;
    return run(u0, bc, dom, cfg, 2.0);
}

inline std::string orders_detail(const std::vector<double>& errs, double lo, double hi) {
    std::string d = "errs";
    for (double e : errs) d += " " + fmt17(e);
    d += "; orders";
    for (std::size_t k = 1; k < errs.size(); ++k) {
        char buf[32];
        std::snprintf(buf, sizeof buf, " %.3f", std::log2(errs[k - 1] / errs[k]));
        d += buf;
    }
    char buf[48];
    std::snprintf(buf, sizeof buf, "; band [%.2f, %.2f]", lo, hi);
    d += buf;
    return d;
}

inline bool orders_in_band(const std::vector<double>& errs, double lo, double hi) {
    for (std::size_t k = 1; k < errs.size(); ++k) {
        const double ord = std::log2(errs[k - 1] / errs[k]);
        if (!(ord >= lo && ord <= hi)) return false;
    }
    return true;
}

}  // namespace detail

/// Run the battery and return one row per item.  Every item is exception-
/// safe: a throw inside an item marks that item failed and the battery
/// continues.
inline std::vector<VerifyItem> verify_battery(bool quick,
                                              FaultInjection fault = FaultInjection::none) {
    std::vector<VerifyItem> items;
    auto add = [&items](const std::string& name, auto&& body) {
        VerifyItem it;
        it.name = name;
        try {
            body(it);
        } catch (const std::exception& e) {
            it.pass = false;
            it.detail = std::string("exception: ") + e.what();
        }
        items.push_back(std::move(it));
    };

    add("manufactured_spatial_order", [&](VerifyItem& it) {
        const std::vector<int> ns = quick ? std::vector<int>{33, 65}
                                          : std::vector<int>{33, 65, 129};
        const double dt = quick ? 1e-4 : 1e-5;
        const double lo = quick ? 1.7 : 1.9;
        const double hi = quick ? 2.3 : 2.1;
        std::vector<double> errs;
        for (int n : ns) errs.push_back(detail::manufactured_error(n, dt, 0.1, fault));
        it.pass = detail::orders_in_band(errs, lo, hi);
        it.detail = detail::orders_detail(errs, lo, hi);
    });

    add("manufactured_temporal_order", [&](VerifyItem& it) {
        const std::vector<double> dts = quick ? std::vector<double>{4e-3, 2e-3}
                                              : std::vector<double>{4e-3, 2e-3, 1e-3};
        const double lo = quick ? 0.8 : 0.9;
        const double hi = quick ? 1.4 : 1.3;
        std::vector<double> errs;
        for (double dt : dts)
            errs.push_back(detail::manufactured_error(257, dt, 1.0, FaultInjection::none));
        it.pass = detail::orders_in_band(errs, lo, hi);
        it.detail = detail::orders_detail(errs, lo, hi);
    });

    // One blow-down run feeds the next three items.
    Trajectory sech2;
    bool sech2_ok = false;
    const int sech2_n = quick ? 65 : 129;
    try {
        sech2 = detail::sech2_trajectory(sech2_n);
        sech2_ok = true;
    } catch (const std::exception&) {
        sech2_ok = false;
    }

    add("sech2_blowdown_time", [&](VerifyItem& it) {
        if (!sech2_ok) throw std::runtime_error("oracle run failed");
        const double tol = quick ? 0.04 : 0.02;
        if (sech2.termination != Termination::blow_down)
            throw std::runtime_error(std::string("expected blow_down, got ") +
                                     to_string(sech2.termination));
        const SingularityReport rep = detect_singularity(sech2, 1.0);
        if (!rep.T_est) throw std::runtime_error("no vanishing-time estimate");
        it.pass = std::abs(*rep.T_est - 1.0) <= tol;
        it.detail = "T_est " + fmt17(*rep.T_est) + " vs exact 1, tol " + fmt17(tol);
    });

    add("mass_law_1d", [&](VerifyItem& it) {
        if (!sech2_ok) throw std::runtime_error("oracle run failed");
        // p = 1 makes the boundary flux state-independent: the backward-Euler
        // mass identity collapses to mass(t) = mass(0) + 4 gamma t exactly.
        const double gamma = -std::tanh(1.0);
        const double m0 = sech2.rows.front().mass;
        double worst = 0.0;
        for (const DiagnosticsRow& r : sech2.rows)
            worst = std::max(worst, std::abs(r.mass - m0 - 4.0 * gamma * r.t));
        const double rel = worst / (1.0 + std::abs(m0));
        it.pass = rel <= 1e-10;
        it.detail = "max |mass - mass0 - 4 gamma t| / (1 + mass0) = " + fmt17(rel) +
                    ", threshold 1e-10";
    });

    add("gauss_bonnet_1d", [&](VerifyItem& it) {
        if (!sech2_ok) throw std::runtime_error("oracle run failed");
        double worst = 0.0;
        for (const DiagnosticsRow& r : sech2.rows)
            worst = std::max(worst, std::abs(r.gb_residual));
        it.pass = worst <= 1e-9;
        it.detail = "max |gb_residual| = " + fmt17(worst) + ", threshold 1e-9";
    });

    add("disc_static_truncation", [&](VerifyItem& it) {
        const DiscBoundary bcd = DiscBoundary::curvature_form(0.0);
        auto pde_residual = [&](int n) {
            const RadialGrid grid{1.0, n};
            SolutionState s;
            s.t = 0.0;
            s.w.resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i)
                s.w[i] = std::log(hemisphere_oracle(grid.r(i), 0.0, 1.0));
            const std::vector<double> lap = apply_radial_log_diffusion(s, bcd, grid);
            double worst = 0.0;
            for (int i = 0; i < n; ++i) {
                const double rr = grid.r(i);
                const double ut = -8.0 / ((1.0 + rr * rr) * (1.0 + rr * rr));
                worst = std::max(worst, std::abs(lap[i] - ut));
            }
            return worst;
        };
        auto static_gb = [&](int n) {
            const RadialGrid grid{1.0, n};
            SolutionState s;
            s.t = 0.0;
            s.w.resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i)
                s.w[i] = std::log(hemisphere_oracle(grid.r(i), 0.0, 1.0));
            const std::vector<double> lap = apply_radial_log_diffusion(s, bcd, grid);
            return DiscProblem(grid, bcd).diagnostics(s.w, 0.0, lap).gb_residual;
        };
        const double resid = pde_residual(129);
        const double ratio = std::abs(static_gb(65)) / std::abs(static_gb(129));
        it.pass = resid <= 8e-3 && ratio >= 3.2 && ratio <= 4.8;
        it.detail = "hemisphere PDE residual(n=129) " + fmt17(resid) +
                    " (<= 8e-3); static gb ratio 65/129 " + fmt17(ratio) + " in [3.2, 4.8]";
    });

    if (!quick) {
        add("disc_gauss_bonnet_scaling", [&](VerifyItem& it) {
            const DiscBoundary bcd = DiscBoundary::curvature_form(0.0);
            auto run_max_gb = [&](int n) {
                const RadialGrid grid{1.0, n};
                std::vector<double> prof(static_cast<std::size_t>(n));
                for (int i = 0; i < n; ++i) prof[i] = hemisphere_oracle(grid.r(i), 0.0, 1.0);
                const SolutionState u0 = make_compatible_radial_data(prof, bcd, grid, 0.25);
                SolverConfig cfg;
                cfg.dt_init = 2e-4;
                cfg.dt_max = 2e-4;
                const Trajectory traj = run_disc(u0, bcd, grid, cfg, 0.3);
                double worst = 0.0;
                for (const DiagnosticsRow& r : traj.rows)
                    worst = std::max(worst, std::abs(r.gb_residual));
                return worst;
            };
            const double g65 = run_max_gb(65);
            const double g129 = run_max_gb(129);
            const double ratio = g65 / g129;
            it.pass = ratio >= 3.0 && ratio <= 5.0;
            it.detail = "max |gb| over run: n=65 " + fmt17(g65) + ", n=129 " + fmt17(g129) +
                        "; ratio " + fmt17(ratio) + " in [3, 5]";
        });

        add("cylinder_reduction", [&](VerifyItem& it) {
            CylinderGrid grid;
            grid.l = 1.0;
            grid.nx = 33;
            grid.ntheta = 8;
            BoundaryCurvature phi;
            phi.phi = [](double, double, double) { return 1.0; };
            phi.phi_min = 1.0;
            phi.phi_max = 1.0;
            SolutionState u2;
            u2.t = 0.0;
            u2.w.resize(grid.size());
            for (int j = 0; j < grid.ntheta; ++j)
                for (int i = 0; i < grid.nx; ++i)
                    u2.w[grid.index(i, j)] = grid.x(i) * grid.x(i) - 1.0;
            SolverConfig cfg;
            cfg.dt_init = 1e-3;
            cfg.dt_max = 1e-3;
            const Trajectory t2 =
                integrate_adaptive(CylinderProblem(grid, phi), u2, cfg, 0.25);

            const Interval1D dom{1.0, grid.nx};
            RobinBoundary bc;
            bc.gamma = 1.0;  // constant curvature 1 is the p = 3/2, gamma = 1 flux law
            bc.p = 1.5;
            SolutionState u1;
            u1.t = 0.0;
            u1.w.resize(static_cast<std::size_t>(grid.nx));
            for (int i = 0; i < grid.nx; ++i) u1.w[i] = dom.x(i) * dom.x(i) - 1.0;
            const Trajectory t1 = run(u1, bc, dom, cfg, 0.25);

            const SolutionState& f2 = t2.samples.back();
            const SolutionState& f1 = t1.samples.back();
            double worst = 0.0;
            for (int j = 0; j < grid.ntheta; ++j)
                for (int i = 0; i < grid.nx; ++i)
                    worst = std::max(worst, std::abs(std::exp(f2.w[grid.index(i, j)]) -
                                                     std::exp(f1.w[static_cast<std::size_t>(i)])));
            it.pass = worst <= 1e-9;
            it.detail = "max nodewise |u_2d - u_1d| at t = 0.25: " + fmt17(worst) +
                        ", threshold 1e-9";
        });
    }

    add("rerun_determinism", [&](VerifyItem& it) {
        Scenario scn;
        scn.name = "verify_determinism";
        scn.solver = SolverKind::line1d;
        scn.l = 1.0;
        scn.n = 65;
        scn.gamma = 1.0;
        scn.p = 1.5;
        scn.initial = "log_quadratic";
        scn.initial_params = {1.0, -1.0};
        scn.t_final = 0.5;
        const RunResult a = execute(scn);
        const RunResult b = execute(scn);
        const std::string ca = csv_from_rows(a.traj.rows);
        const std::string cb = csv_from_rows(b.traj.rows);
        it.pass = ca == cb;
        it.detail = it.pass ? "repeated run produced a bitwise-identical CSV (" +
                                  std::to_string(a.traj.rows.size()) + " rows)"
                            : "CSV strings differ between reruns";
    });

    return items;
}

/// verify [--quick]: print one line per battery item; exit 0 only if all pass.
inline int cmd_verify(bool quick) {
    const std::vector<VerifyItem> items = verify_battery(quick);
    std::printf("verification battery (%s):\n", quick ? "quick" : "full");
    int passed = 0;
    for (const VerifyItem& it : items) {
        std::printf("  %s  %-28s %s\n", it.pass ? "PASS" : "FAIL", it.name.c_str(),
                    it.detail.c_str());
        if (it.pass) ++passed;
    }
    std::printf("result: %d/%zu passed\n", passed, items.size());
    return passed == static_cast<int>(items.size()) ? 0 : 1;
}

}  // namespace logdiff
