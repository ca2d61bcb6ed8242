#pragma once

/// Method-of-lines solver for the log-diffusion equation du/dt = (log u)_xx
/// on [-l, l] with the nonlinear flux condition du/deta = 2*gamma*u^p, plus
/// the adaptive implicit time-stepping loop shared by the radial and 2D
/// solvers and singular-event detection.
///
/// Discretization notes:
///  - State is w = log u; the interior operator is the plain second
///    difference of w.
///  - Boundary rows eliminate the ghost node through the flux condition
///    d w/dx (+-l) = +-2*gamma*exp((p-1)w), which keeps the Jacobian
///    tridiagonal and the rows second-order accurate.
///  - Time stepping is backward Euler written in u: solve
///        (exp(w+) - exp(w)) / dt = L(w+) + source(t+),
///    by damped Newton.  Writing the time difference in u (rather than
///    e^w dw) makes the discrete mass budget telescope exactly: the change
///    of the trapezoid mass per step equals dt times the boundary flux with
///    no quadrature drift, so conservation checks hold to roundoff.

#include "core.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

// LAPACK tridiagonal solve with partial pivoting.
extern "C" void dgtsv_(const int* n, const int* nrhs, double* dl, double* d,
                       double* du, double* b, const int* ldb, int* info);

namespace logdiff {

/// How a run ended.
enum class Termination {
    reached_t_final,  ///< integrated to the requested horizon
    blow_up,          ///< u_max exceeded blow_up_threshold
    blow_down,        ///< u_min fell below blow_down_threshold
    step_underflow,   ///< dt fell below dt_min after repeated rejections
};

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::reached_t_final: return "reached_t_final";
        case Termination::blow_up: return "blow_up";
        case Termination::blow_down: return "blow_down";
        case Termination::step_underflow: return "step_underflow";
    }
    return "unknown";
}

/// Per-step diagnostics captured along a trajectory.  The geometric entries
/// use the conformal dictionary (R = -(Lap log u)/u, area element u dx dtheta,
/// boundary element sqrt(u) ds) evaluated with the same stencils as the
/// solver, so identities that hold for the discrete operator hold here too.
struct DiagnosticsRow {
    double t = 0.0;
    double u_min = 0.0;
    double u_max = 0.0;
    double mass = 0.0;         ///< integral of u over the domain coordinate
    double R_min = 0.0;
    double R_max = 0.0;
    double area = 0.0;         ///< Riemannian area of the surface
    double length = 0.0;       ///< total boundary length
    double gb_residual = 0.0;  ///< integral of R dA + 2 integral of k ds - 4*pi*chi
    double lap_w_interior_min = 0.0;  ///< min over interior nodes of Lap(log u)
    double lap_w_interior_max = 0.0;  ///< max over interior nodes of Lap(log u)
    double boundary_flux = 0.0;  ///< dA/dt from the boundary terms, = 2 integral of k ds
    double r_boundary = 0.0;     ///< boundary average curvature (R weighted by ds)
};

/// Result of one attempted implicit step.
struct StepOutcome {
    SolutionState state;   ///< state after the step (valid when accepted)
    double dt_used = 0.0;
    int newton_iters = 0;
    bool accepted = false;
    double rel_change = 0.0;  ///< max over nodes of |du|/u across the step
};

/// Time series of a run: one diagnostics row for the initial state plus one
/// per accepted step, states sampled at the requested output times, and how
/// the run ended.
struct Trajectory {
    std::vector<DiagnosticsRow> rows;
    std::vector<SolutionState> samples;            ///< states at output times (+ final state)
    std::vector<std::size_t> sample_row_indices;   ///< rows[] index of each sample
    Termination termination = Termination::reached_t_final;
    double t_end = 0.0;
    long accepted_steps = 0;
    long rejected_steps = 0;

    const DiagnosticsRow& final_row() const { return rows.back(); }
};

/// Optional extra right-hand side f(x, t); used only by the
/// manufactured-solution verification mode and identically zero in physics
/// runs.
using SourceTerm = std::function<double(double x, double t)>;

/// Optional replacement of the flux condition by prescribed boundary slopes
/// of log u: returns {d(log u)/dx at -l, d(log u)/dx at +l} at time t.  Used
/// by the manufactured-solution mode, where the exact solution's flux is
/// known but does not follow the power law.
using BoundarySlopes = std::function<std::pair<double, double>(double t)>;

namespace detail {

/// Solve the tridiagonal system in place; bands are destroyed.  Returns false
/// when the factorization breaks down (exactly singular matrix).
inline bool solve_tridiagonal(std::vector<double>& dl, std::vector<double>& d,
                              std::vector<double>& du, std::vector<double>& rhs) {
    const int n = static_cast<int>(d.size());
    const int one = 1;
    int info = 0;
    dgtsv_(&n, &one, dl.data(), d.data(), du.data(), rhs.data(), &n, &info);
    return info == 0;
}

constexpr double kLogOverflowGuard = 600.0;  ///< |w| beyond this rejects the Newton iterate

/// Result of one damped-Newton solve of the implicit system.
struct NewtonResult {
    std::vector<double> w;
    int iterations = 0;
    bool converged = false;
};

template <class Problem>
NewtonResult newton_solve_tridiagonal(const Problem& prob, const std::vector<double>& w_old,
                                      double dt, double t_new, const SolverConfig& cfg);

}  // namespace detail

/// The 1D line problem: spatial operator, Jacobian bands, and geometric
/// diagnostics.  Instances are immutable after construction and safe to share
/// across concurrent runs.
class LineProblem {
public:
    LineProblem(Interval1D dom, RobinBoundary bc, SourceTerm src = nullptr,
                BoundarySlopes boundary_slopes = nullptr)
        : dom_(dom), bc_(bc), src_(std::move(src)), slopes_(std::move(boundary_slopes)) {
        dom_.validate();
        bc_.validate();
    }

    const Interval1D& dom() const { return dom_; }
    const RobinBoundary& bc() const { return bc_; }
    bool has_source() const { return static_cast<bool>(src_); }
    std::size_t size() const { return static_cast<std::size_t>(dom_.n); }

    /// Boundary slopes of w actually applied at time t: the flux condition
    /// unless a manufactured-mode override is installed.
    std::pair<double, double> wall_slopes(const std::vector<double>& w, double t) const {
        if (slopes_) return slopes_(t);
        const double gl = -2.0 * bc_.gamma * std::exp((bc_.p - 1.0) * w.front());
        const double gr = 2.0 * bc_.gamma * std::exp((bc_.p - 1.0) * w.back());
        return {gl, gr};
    }

    /// du/dt from the spatial operator alone: second difference of w in the
    /// interior, ghost-eliminated flux rows at the walls.
    void apply_operator(const std::vector<double>& w, double t, std::vector<double>& out) const {
        const std::size_t n = w.size();
        const double h = dom_.h();
        const double inv_h2 = 1.0 / (h * h);
        out.resize(n);
        for (std::size_t i = 1; i + 1 < n; ++i)
            out[i] = (w[i - 1] - 2.0 * w[i] + w[i + 1]) * inv_h2;
        const auto [gl, gr] = wall_slopes(w, t);
        out[0] = 2.0 * (w[1] - w[0]) * inv_h2 - 2.0 * gl / h;
        out[n - 1] = 2.0 * (w[n - 2] - w[n - 1]) * inv_h2 + 2.0 * gr / h;
    }

    /// Full right-hand side: spatial operator plus manufactured source.
    void rhs(const std::vector<double>& w, double t, std::vector<double>& out) const {
        apply_operator(w, t, out);
        if (src_)
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += src_(dom_.x(static_cast<int>(i)), t);
    }

    /// Tridiagonal bands of -d(rhs)/dw plus diag(exp(w)/dt): the Newton
    /// matrix for the implicit step.
    void newton_matrix(const std::vector<double>& w, double dt, std::vector<double>& dl,
                       std::vector<double>& d, std::vector<double>& du) const {
        const std::size_t n = w.size();
        const double h = dom_.h();
        const double inv_h2 = 1.0 / (h * h);
        dl.assign(n - 1, -inv_h2);
        du.assign(n - 1, -inv_h2);
        d.assign(n, 2.0 * inv_h2);
        du[0] = -2.0 * inv_h2;
        dl[n - 2] = -2.0 * inv_h2;
        if (!slopes_) {
            // d/dw of the flux terms -2*gl/h and +2*gr/h in the wall rows.
            const double c = 4.0 * bc_.gamma * (bc_.p - 1.0) / h;
            d.front() -= c * std::exp((bc_.p - 1.0) * w.front());
            d.back() -= c * std::exp((bc_.p - 1.0) * w.back());
        }
        for (std::size_t i = 0; i < n; ++i) d[i] += std::exp(w[i]) / dt;
    }

    /// Geometric diagnostics of a state; `lap` must hold apply_operator(w).
    DiagnosticsRow diagnostics(const std::vector<double>& w, double t,
                               const std::vector<double>& lap) const {
        const std::size_t n = w.size();
        DiagnosticsRow row;
        row.t = t;
        row.u_min = std::numeric_limits<double>::infinity();
        row.u_max = -std::numeric_limits<double>::infinity();
        row.R_min = std::numeric_limits<double>::infinity();
        row.R_max = -std::numeric_limits<double>::infinity();
        std::vector<double> u(n), Ru(n);
        for (std::size_t i = 0; i < n; ++i) {
            u[i] = std::exp(w[i]);
            const double R = -lap[i] / u[i];
            Ru[i] = R * u[i];
            row.u_min = std::min(row.u_min, u[i]);
            row.u_max = std::max(row.u_max, u[i]);
            row.R_min = std::min(row.R_min, R);
            row.R_max = std::max(row.R_max, R);
        }
        const double h = dom_.h();
        row.mass = trapezoid(u, h);
        row.area = 2.0 * M_PI * row.mass;
        const double sqrt_ul = std::sqrt(u.front());
        const double sqrt_ur = std::sqrt(u.back());
        row.length = 2.0 * M_PI * (sqrt_ul + sqrt_ur);
        // Boundary geodesic curvature from the applied slope: k = e^{-w/2} *
        // (outward slope of w)/2, which reduces to gamma*u^{p-3/2} under the
        // flux condition.  In k ds the sqrt(u) factors cancel, so each circle
        // contributes pi * (outward slope).  The closed-surface identity is
        // integral(R dA) + 2 integral(k ds) = 0 (Euler characteristic zero).
        const auto [gl, gr] = wall_slopes(w, t);
        const double k_ds = M_PI * (gr - gl);
        row.gb_residual = 2.0 * M_PI * trapezoid(Ru, h) + 2.0 * k_ds;
        row.boundary_flux = 2.0 * k_ds;
        // Wall curvature for the length law: the ghost-row operator value is
        // only O(h) at the walls, so extrapolate R quadratically from the
        // three nearest interior nodes (O(h^2) on smooth fields).
        auto R_at = [&](std::size_t i) { return -lap[i] / u[i]; };
        const double R_left =
            n >= 5 ? detail::extrapolate_to_wall(R_at(1), R_at(2), R_at(3)) : R_at(0);
        const double R_right =
            n >= 5 ? detail::extrapolate_to_wall(R_at(n - 2), R_at(n - 3), R_at(n - 4))
                   : R_at(n - 1);
        row.r_boundary = (R_left * sqrt_ul + R_right * sqrt_ur) / (sqrt_ul + sqrt_ur);
        row.lap_w_interior_min = std::numeric_limits<double>::infinity();
        row.lap_w_interior_max = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i + 1 < n; ++i) {
            row.lap_w_interior_min = std::min(row.lap_w_interior_min, lap[i]);
            row.lap_w_interior_max = std::max(row.lap_w_interior_max, lap[i]);
        }
        return row;
    }

    DiagnosticsRow diagnostics(const std::vector<double>& w, double t) const {
        std::vector<double> lap;
        apply_operator(w, t, lap);
        return diagnostics(w, t, lap);
    }

    /// Implicit-step nonlinear solve; tridiagonal Jacobian handled directly.
    detail::NewtonResult solve_implicit(const std::vector<double>& w_old, double dt, double t_new,
                                        const SolverConfig& cfg) const {
        return detail::newton_solve_tridiagonal(*this, w_old, dt, t_new, cfg);
    }

private:
    Interval1D dom_;
    RobinBoundary bc_;
    SourceTerm src_;
    BoundarySlopes slopes_;
};

namespace detail {

/// Damped Newton for (exp(w+) - u_old)/dt = rhs(w+, t_new), for any problem
/// exposing rhs() and newton_matrix() with a tridiagonal Jacobian.  The
/// damping halves the update until the residual max-norm decreases, which is
/// what keeps the iteration alive when exp(-w) spans many orders of
/// magnitude near singular events.  Divergence, overflow past the log guard,
/// or a singular matrix all report non-convergence (never NaN propagation);
/// the caller reacts by halving dt.
template <class Problem>
NewtonResult newton_solve_tridiagonal(const Problem& prob, const std::vector<double>& w_old,
                                      double dt, double t_new, const SolverConfig& cfg) {
    const std::size_t n = w_old.size();
    NewtonResult res;
    res.w = w_old;
    std::vector<double> u_old(n);
    for (std::size_t i = 0; i < n; ++i) u_old[i] = std::exp(w_old[i]);

    std::vector<double> f(n), f_try(n), w_try(n), rhs(n), dl, d, du;
    auto residual = [&](const std::vector<double>& w, std::vector<double>& out) -> bool {
        prob.rhs(w, t_new, out);
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
        prob.newton_matrix(res.w, dt, dl, d, du);
        rhs = f;
        for (double& v : rhs) v = -v;
        if (!solve_tridiagonal(dl, d, du, rhs)) return res;
        double update_norm = 0.0;
        for (double v : rhs) {
            if (!std::isfinite(v)) return res;
            update_norm = std::max(update_norm, std::abs(v));
        }
        if (update_norm <= cfg.newton_tol) {
            // Converged: the correction is below tolerance.  Apply it and stop
            // without the line search, which can fail spuriously once the
            // residual reaches its roundoff floor.
            for (std::size_t i = 0; i < n; ++i) res.w[i] += rhs[i];
            res.converged = true;
            return res;
        }
        // Line search: halve until the residual decreases.
        double step = 1.0;
        bool improved = false;
        for (int back = 0; back < 14; ++back) {
            bool in_range = true;
            for (std::size_t i = 0; i < n; ++i) {
                w_try[i] = res.w[i] + step * rhs[i];
                if (std::abs(w_try[i]) >= kLogOverflowGuard) {
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

}  // namespace detail

/// One backward-Euler step attempt from `state` with the given dt.  The step
/// is accepted when Newton converges and the per-node relative change of u
/// stays below cfg.step_rel_change; on rejection the caller halves dt.
template <class Problem>
StepOutcome attempt_step(const Problem& prob, const SolutionState& state, double dt,
                         const SolverConfig& cfg) {
    StepOutcome out;
    out.dt_used = dt;
    const double t_new = state.t + dt;
    detail::NewtonResult nr = prob.solve_implicit(state.w, dt, t_new, cfg);
    out.newton_iters = nr.iterations;
    if (!nr.converged) return out;
    double rel = 0.0;
    for (std::size_t i = 0; i < state.w.size(); ++i)
        rel = std::max(rel, std::abs(std::expm1(nr.w[i] - state.w[i])));
    out.rel_change = rel;
    if (!(rel <= cfg.step_rel_change)) return out;
    out.accepted = true;
    out.state.t = t_new;
    out.state.w = std::move(nr.w);
    return out;
}

/// Spec'd single-step entry point for the line problem.
inline StepOutcome step_implicit(const SolutionState& state, const RobinBoundary& bc,
                                 const Interval1D& dom, const SolverConfig& cfg, double dt,
                                 SourceTerm src = nullptr) {
    cfg.validate();
    if (!(dt >= cfg.dt_min && dt <= cfg.dt_max))
        throw std::invalid_argument("step_implicit: dt outside [dt_min, dt_max]");
    return attempt_step(LineProblem(dom, bc, std::move(src)), state, dt, cfg);
}

/// du/dt field of the spatial operator for a given state (flux rows
/// included); the geometry module builds its curvature field from this same
/// function so the two agree to machine precision.
inline std::vector<double> apply_log_diffusion(const SolutionState& state, const RobinBoundary& bc,
                                               const Interval1D& dom) {
    std::vector<double> lap;
    LineProblem(dom, bc).apply_operator(state.w, state.t, lap);
    // The operator acts on w but the evolved quantity is u: du/dt = Lap(log u)
    // nodewise, already what apply_operator returns.
    return lap;
}

/// Adaptive implicit integration shared by the line, radial, and cylinder
/// problems.  The step size is clamped so requested output times and t_final
/// are hit exactly (the clamped time is assigned, not accumulated, keeping
/// reruns bitwise identical).  Diagnostics are recorded for the initial state
/// and every accepted step.
template <class Problem>
Trajectory integrate_adaptive(const Problem& prob, const SolutionState& initial,
                              const SolverConfig& cfg, double t_final,
                              std::vector<double> output_times = {}) {
    cfg.validate();
    if (initial.w.size() != prob.size())
        throw std::invalid_argument("integrate_adaptive: state size does not match problem");
    std::sort(output_times.begin(), output_times.end());

    Trajectory traj;
    SolutionState state = initial;
    std::vector<double> lap;

    auto record = [&](const SolutionState& s) {
        prob.apply_operator(s.w, s.t, lap);
        traj.rows.push_back(prob.diagnostics(s.w, s.t, lap));
    };
    auto sample = [&](const SolutionState& s) {
        if (!traj.sample_row_indices.empty() && traj.sample_row_indices.back() == traj.rows.size() - 1)
            return;  // already sampled this row
        traj.samples.push_back(s);
        traj.sample_row_indices.push_back(traj.rows.size() - 1);
    };

    record(state);
    std::size_t next_out = 0;
    while (next_out < output_times.size() && output_times[next_out] <= state.t) {
        if (output_times[next_out] == state.t) sample(state);
        ++next_out;
    }

    double dt = std::min(cfg.dt_init, cfg.dt_max);
    traj.termination = Termination::reached_t_final;
    while (state.t < t_final) {
        double dt_clamped = std::min(dt, t_final - state.t);
        double t_target = (dt_clamped == t_final - state.t) ? t_final : state.t + dt_clamped;
        if (next_out < output_times.size() && output_times[next_out] - state.t <= dt_clamped) {
            dt_clamped = output_times[next_out] - state.t;
            t_target = output_times[next_out];
        }

        StepOutcome step = attempt_step(prob, state, dt_clamped, cfg);
        if (!step.accepted) {
            ++traj.rejected_steps;
            dt *= 0.5;
            if (dt < cfg.dt_min) {
                traj.termination = Termination::step_underflow;
                break;
            }
            continue;
        }
        state = std::move(step.state);
        state.t = t_target;  // exact, avoids accumulated roundoff at sample times
        ++traj.accepted_steps;
        record(state);
        if (next_out < output_times.size() && state.t == output_times[next_out]) {
            sample(state);
            ++next_out;
        }

        const DiagnosticsRow& row = traj.rows.back();
        if (row.u_max >= cfg.blow_up_threshold) {
            traj.termination = Termination::blow_up;
            break;
        }
        if (row.u_min <= cfg.blow_down_threshold) {
            traj.termination = Termination::blow_down;
            break;
        }

        // Easy-step criterion: few Newton iterations and comfortably inside
        // the relative-change budget.
        if (step.newton_iters <= 6 && step.rel_change < 0.8 * cfg.step_rel_change)
            dt = std::min(dt * 1.2, cfg.dt_max);
    }
    traj.t_end = state.t;
    sample(state);  // final state is always available to callers
    return traj;
}

/// Detected singular event of a finished trajectory.
struct SingularityReport {
    enum class Event { none, blow_up, blow_down } event = Event::none;
    std::optional<double> T_est;
};

inline const char* to_string(SingularityReport::Event e) {
    switch (e) {
        case SingularityReport::Event::none: return "none";
        case SingularityReport::Event::blow_up: return "blow_up";
        case SingularityReport::Event::blow_down: return "blow_down";
    }
    return "unknown";
}

/// Estimate the singular time by linear extrapolation over the last 20% of
/// diagnostic rows: the extrapolated quantity is u_min for blow-down and the
/// vanishing power u_max^(-|2-p|) (1/u_max at p = 2) for blow-up; both decay
/// linearly to zero at the singular time in the regimes where finite-time
/// events occur.
inline SingularityReport detect_singularity(const Trajectory& traj, double p) {
    if (traj.rows.size() < 10)
        throw std::invalid_argument("detect_singularity: need at least 10 diagnostic rows");
    SingularityReport rep;
    if (traj.termination != Termination::blow_up && traj.termination != Termination::blow_down)
        return rep;
    rep.event = (traj.termination == Termination::blow_up) ? SingularityReport::Event::blow_up
                                                           : SingularityReport::Event::blow_down;
    const std::size_t total = traj.rows.size();
    const std::size_t k = std::max<std::size_t>(5, total / 5);
    const std::size_t begin = total - k;
    // Least-squares line z = zbar + b (t - tbar) over the tail window.  The
    // times are centered first: near a singularity the accepted steps shrink
    // geometrically and the tail can span a time range around 1e-11, where
    // the uncentered normal equations cancel catastrophically.
    auto z_of = [&](const DiagnosticsRow& r) {
        if (rep.event == SingularityReport::Event::blow_down) return r.u_min;
        if (p == 2.0) return 1.0 / r.u_max;
        return std::pow(r.u_max, -std::abs(2.0 - p));
    };
    const double nk = static_cast<double>(k);
    double tbar = 0.0, zbar = 0.0;
    for (std::size_t i = begin; i < total; ++i) {
        tbar += traj.rows[i].t;
        zbar += z_of(traj.rows[i]);
    }
    tbar /= nk;
    zbar /= nk;
    double stt = 0.0, stz = 0.0;
    for (std::size_t i = begin; i < total; ++i) {
        const double dt = traj.rows[i].t - tbar;
        stt += dt * dt;
        stz += dt * (z_of(traj.rows[i]) - zbar);
    }
    const double b = stt > 0.0 ? stz / stt : 0.0;
    if (b < 0.0)
        rep.T_est = tbar - zbar / b;
    else
        rep.T_est = traj.t_end;  // quantity not decreasing: event is where we stopped
    return rep;
}

/// Full adaptive run of the line problem.  The initial data must satisfy the
/// compatibility condition to 1e-6 per end (use make_compatible_initial_data
/// to repair nearly-compatible data; without compatibility the continuous
/// problem loses C^2 regularity at the corners and observed convergence
/// degrades).
inline Trajectory run(const SolutionState& u0, const RobinBoundary& bc, const Interval1D& dom,
                      const SolverConfig& cfg, double t_final,
                      std::vector<double> output_times = {}, SourceTerm src = nullptr,
                      BoundarySlopes boundary_slopes = nullptr) {
    const bool manufactured = static_cast<bool>(src) || static_cast<bool>(boundary_slopes);
    if (!manufactured) {
        auto [rl, rr] = compatibility_residual(u0, bc, dom);
        if (!(std::abs(rl) < 1e-6 && std::abs(rr) < 1e-6))
            throw std::invalid_argument("run: initial data violates the compatibility condition");
    }
    LineProblem prob(dom, bc, std::move(src), std::move(boundary_slopes));
    return integrate_adaptive(prob, u0, cfg, t_final, std::move(output_times));
}

}  // namespace logdiff
