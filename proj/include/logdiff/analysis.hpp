#pragma once

/// Post-processing over trajectories: rate fitting in transformed
/// coordinates, moment functionals, integral bound checkers with their
/// implied singularity deadlines, the two-run ordering harness, and the
/// flatness series.  Everything here is pure and operates on immutable
/// trajectories, so calls may run concurrently.

#include "core.hpp"
#include "solver1d.hpp"

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace logdiff {

namespace detail {

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double rms = 0.0;
};

/// Unweighted least squares y = a + b x with the rms of the residual.
inline LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("linear_fit: degenerate abscissa");
    LinearFit out;
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - out.intercept - out.slope * xs[i];
        ss += r * r;
    }
    out.rms = std::sqrt(ss / n);
    return out;
}

}  // namespace detail

/// Rate models: v ~ t^alpha, v ~ e^(lambda t), v ~ e^(-D t^2), v = C(T - t).
enum class FitModel { power, exponential, gaussian_log, linear_vanishing };

inline std::string to_string(FitModel m) {
    switch (m) {
        case FitModel::power: return "power";
        case FitModel::exponential: return "exponential";
        case FitModel::gaussian_log: return "gaussian_log";
        case FitModel::linear_vanishing: return "linear_vanishing";
    }
    return "?";
}

/// A fitted rate.  `param` holds the headline parameter: the exponent alpha
/// (power), the rate lambda (exponential), the decay constant D
/// (gaussian_log), or the vanishing time T (linear_vanishing, with the
/// prefactor C in `param2`).  `rms_residual` is taken in the transformed
/// coordinates the fit ran in.
struct RateFit {
    FitModel model = FitModel::power;
    double param = 0.0;
    double param2 = 0.0;
    double window_t0 = 0.0;
    double window_t1 = 0.0;
    int points = 0;
    double rms_residual = 0.0;
};

/// Least squares in the model's transformed coordinates:
///   power:            log v  vs  log t   (needs t > 0)
///   exponential:      log v  vs  t
///   gaussian_log:     log v  vs  t^2     (param D = -slope)
///   linear_vanishing: v      vs  t       (param T = -intercept/slope)
inline RateFit fit_rate(const std::vector<std::pair<double, double>>& series, FitModel model,
                        double t0, double t1) {
    std::vector<double> xs, ys;
    for (const auto& [t, v] : series) {
        if (t < t0 || t > t1) continue;
        if (!(v > 0.0)) throw std::invalid_argument("fit_rate: values must be positive");
        switch (model) {
            case FitModel::power:
                if (!(t > 0.0))
                    throw std::invalid_argument("fit_rate: power model needs t > 0 in the window");
                xs.push_back(std::log(t));
                ys.push_back(std::log(v));
                break;
            case FitModel::exponential:
                xs.push_back(t);
                ys.push_back(std::log(v));
                break;
            case FitModel::gaussian_log:
                xs.push_back(t * t);
                ys.push_back(std::log(v));
                break;
            case FitModel::linear_vanishing:
                xs.push_back(t);
                ys.push_back(v);
                break;
        }
    }
    if (xs.size() < 8)
        throw std::invalid_argument("fit_rate: need at least 8 points in the fit window");
    const detail::LinearFit lf = detail::linear_fit(xs, ys);
    RateFit out;
    out.model = model;
    out.window_t0 = t0;
    out.window_t1 = t1;
    out.points = static_cast<int>(xs.size());
    out.rms_residual = lf.rms;
    switch (model) {
        case FitModel::power:
        case FitModel::exponential: out.param = lf.slope; break;
        case FitModel::gaussian_log: out.param = -lf.slope; break;
        case FitModel::linear_vanishing:
            if (!(lf.slope < 0.0))
                throw std::invalid_argument("fit_rate: series is not vanishing (slope >= 0)");
            out.param = -lf.intercept / lf.slope;  // T
            out.param2 = -lf.slope;                // C
            break;
    }
    return out;
}

/// Convenience: fit one of the extremal-value series recorded every
/// accepted step.  select_max picks u_max, otherwise u_min.
inline RateFit fit_rate(const Trajectory& traj, bool select_max, FitModel model, double t0,
                        double t1) {
    std::vector<std::pair<double, double>> series;
    series.reserve(traj.rows.size());
    for (const auto& r : traj.rows) series.emplace_back(r.t, select_max ? r.u_max : r.u_min);
    return fit_rate(series, model, t0, t1);
}

enum class MomentKind { r, q };

/// r_n(t) = integral of u^n, q_n(t) = integral of u^(-n), per sampled state.
struct MomentSeries {
    double n = 1.0;
    MomentKind kind = MomentKind::r;
    std::vector<double> times;
    std::vector<double> values;
};

inline MomentSeries moment_series(const Trajectory& traj, double n, MomentKind kind,
                                  const Interval1D& dom) {
    if (!(n >= 1.0)) throw std::invalid_argument("moment_series: order must be >= 1");
    dom.validate();
    MomentSeries out;
    out.n = n;
    out.kind = kind;
    const double power = kind == MomentKind::r ? n : -n;
    for (const SolutionState& s : traj.samples) {
        if (s.w.size() != static_cast<std::size_t>(dom.n))
            throw std::invalid_argument("moment_series: sample size does not match the domain");
        std::vector<double> integrand(s.w.size());
        for (std::size_t i = 0; i < s.w.size(); ++i) integrand[i] = std::exp(power * s.w[i]);
        out.times.push_back(s.t);
        out.values.push_back(trapezoid(integrand, dom.h()));
    }
    return out;
}

/// Outcome of an integral mass bound: the per-row slack of
/// m^e(0) + c t - m^e(t) >= 0 (e and c depending on the regime), the implied
/// singularity deadline t*, and whether the regime's interior sign condition
/// held for the whole run.
struct MassBoundReport {
    std::vector<double> times;
    std::vector<double> slacks;
    double min_slack = 0.0;
    double t_star = 0.0;                ///< deadline implied by the bound
    std::optional<double> t_est;        ///< tail-fit singularity estimate, if the run ended singular
    bool deadline_ok = false;           ///< run went singular no later than 1.05 * t_star
    bool sign_condition_held = false;   ///< interior d2(log u)/dx2 kept the regime's sign
};

namespace detail {

inline MassBoundReport mass_bound_common(const Trajectory& traj, double exponent, double coeff,
                                         double p, bool want_negative_lap,
                                         Termination singular_kind) {
    MassBoundReport rep;
    if (traj.rows.empty()) throw std::invalid_argument("mass bound: empty trajectory");
    const double m0e = std::pow(traj.rows.front().mass, exponent);
    rep.min_slack = std::numeric_limits<double>::infinity();
    rep.sign_condition_held = true;
    for (const auto& r : traj.rows) {
        const double slack = m0e + coeff * r.t - std::pow(r.mass, exponent);
        rep.times.push_back(r.t);
        rep.slacks.push_back(slack);
        rep.min_slack = std::min(rep.min_slack, slack);
        if (want_negative_lap ? !(r.lap_w_interior_max < 0.0) : !(r.lap_w_interior_min > 0.0))
            rep.sign_condition_held = false;
    }
    rep.t_star = -m0e / coeff;
    if (traj.termination == singular_kind) {
        const SingularityReport sr = detect_singularity(traj, p);
        rep.t_est = sr.T_est;
        rep.deadline_ok = sr.T_est.has_value() && *sr.T_est <= 1.05 * rep.t_star;
    }
    return rep;
}

}  // namespace detail

/// Blow-down bound for p < 1, gamma < 0 (concave log u regime):
/// m^(1+e)(t) <= m^(1+e)(0) + a t with e = 1 - p, a = 2 gamma (1+e) (2l)^e,
/// forcing extinction by t* = -m^(1+e)(0)/a.
inline MassBoundReport check_mass_bound_blowdown(const Trajectory& traj, const RobinBoundary& bc,
                                                 const Interval1D& dom) {
    dom.validate();
    if (!(bc.p < 1.0 && bc.gamma < 0.0))
        throw std::invalid_argument("check_mass_bound_blowdown: needs p < 1 and gamma < 0");
    const double eps = 1.0 - bc.p;
    const double alpha = 2.0 * bc.gamma * (1.0 + eps) * std::pow(2.0 * dom.l, eps);
    return detail::mass_bound_common(traj, 1.0 + eps, alpha, bc.p, true, Termination::blow_down);
}

/// Blow-up bound for p > 2, gamma > 0 (convex log u regime):
/// m^(2-p)(t) <= m^(2-p)(0) + b t with b = 2 (2-p) gamma / (2l)^(p-1) < 0,
/// forcing blow-up by t* = m^(2-p)(0)/(-b).
inline MassBoundReport check_mass_bound_blowup(const Trajectory& traj, const RobinBoundary& bc,
                                               const Interval1D& dom) {
    dom.validate();
    if (!(bc.p > 2.0 && bc.gamma > 0.0))
        throw std::invalid_argument("check_mass_bound_blowup: needs p > 2 and gamma > 0");
    const double beta = 2.0 * (2.0 - bc.p) * bc.gamma / std::pow(2.0 * dom.l, bc.p - 1.0);
    return detail::mass_bound_common(traj, 2.0 - bc.p, beta, bc.p, false, Termination::blow_up);
}

/// Result of running a sub/supersolution pair and checking the strict
/// ordering nodewise at every sampled time the two runs share.
struct OrderingReport {
    double min_gap = 0.0;                       ///< min over shared times/nodes of (high - low)
    std::optional<double> first_violation_t;    ///< earliest shared time with a gap <= 0
    int times_compared = 0;
    Trajectory low;
    Trajectory high;
};

/// Run the pair and report the ordering.  Preconditions (checked):
/// u0_high > u0_low nodewise, and the wall fluxes satisfy
/// 2 gamma_high s^p_high >= 2 gamma_low s^p_low for every state value s
/// between the initial extremes (sampled check), which is the inequality
/// pattern the ordering theorem needs.
inline OrderingReport comparison_harness(const SolutionState& u0_low, const SolutionState& u0_high,
                                         const RobinBoundary& bc_low, const RobinBoundary& bc_high,
                                         const Interval1D& dom, const SolverConfig& cfg,
                                         double t_final,
                                         std::vector<double> output_times = {}) {
    dom.validate();
    if (u0_low.w.size() != u0_high.w.size())
        throw std::invalid_argument("comparison_harness: state sizes differ");
    double lo_min = std::numeric_limits<double>::infinity(), hi_max = 0.0;
    for (std::size_t i = 0; i < u0_low.w.size(); ++i) {
        if (!(u0_high.w[i] > u0_low.w[i]))
            throw std::invalid_argument("comparison_harness: initial data are not strictly ordered");
        lo_min = std::min(lo_min, std::exp(u0_low.w[i]));
        hi_max = std::max(hi_max, std::exp(u0_high.w[i]));
    }
    for (int k = 0; k <= 100; ++k) {
        const double s = lo_min + (hi_max - lo_min) * static_cast<double>(k) / 100.0;
        const double flux_hi = 2.0 * bc_high.gamma * std::pow(s, bc_high.p);
        const double flux_lo = 2.0 * bc_low.gamma * std::pow(s, bc_low.p);
        if (flux_hi < flux_lo - 1e-12 * (1.0 + std::abs(flux_lo)))
            throw std::invalid_argument(
                "comparison_harness: wall fluxes do not satisfy the ordering pattern");
    }
    if (output_times.empty())
        for (int k = 0; k <= 100; ++k)
            output_times.push_back(t_final * static_cast<double>(k) / 100.0);

    OrderingReport rep;
    rep.low = run(u0_low, bc_low, dom, cfg, t_final, output_times);
    rep.high = run(u0_high, bc_high, dom, cfg, t_final, output_times);
    rep.min_gap = std::numeric_limits<double>::infinity();
    const std::size_t common = std::min(rep.low.samples.size(), rep.high.samples.size());
    for (std::size_t k = 0; k < common; ++k) {
        const SolutionState& a = rep.low.samples[k];
        const SolutionState& b = rep.high.samples[k];
        if (a.t != b.t) break;  // one run terminated; stop at the divergence
        double gap = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < a.w.size(); ++i)
            gap = std::min(gap, std::exp(b.w[i]) - std::exp(a.w[i]));
        rep.min_gap = std::min(rep.min_gap, gap);
        if (gap <= 0.0 && !rep.first_violation_t) rep.first_violation_t = a.t;
        ++rep.times_compared;
    }
    return rep;
}

/// u_max/u_min per recorded diagnostics row.
inline std::vector<std::pair<double, double>> flatness_ratio(const Trajectory& traj) {
    std::vector<std::pair<double, double>> out;
    out.reserve(traj.rows.size());
    for (const auto& r : traj.rows) out.emplace_back(r.t, r.u_max / r.u_min);
    return out;
}

}  // namespace logdiff
