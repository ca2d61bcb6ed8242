#pragma once

/// Run orchestration and file output behind the CLI: scenario execution with
/// its fits and checks, CSV time series (9 fixed columns, 17-significant-digit
/// floats), ordered-key JSON summaries, concurrent sweeps, the two-scenario
/// comparison command, and the CSV rate-fit command.
///
/// File contract: every artifact is written atomically (complete temp file,
/// then rename), so concurrent sweeps and interrupted runs never leave
/// partial files.  The output directory is $LOGDIFF_OUT_DIR, defaulting to
/// ./out.  Identical scenario + build produce bitwise-identical CSVs; the
/// summary is deterministic except for its wall_time_seconds field.

#include "scenario.hpp"

#include "json.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace logdiff {

using ordered_json = nlohmann::ordered_json;

/// 17 significant digits: enough to round-trip an IEEE double exactly.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

inline std::filesystem::path output_directory() {
    const char* env = std::getenv("LOGDIFF_OUT_DIR");
    return std::filesystem::path(env != nullptr && *env != '\0' ? env : "./out");
}

/// Write content to a unique temp file in the target directory, then rename
/// onto the final path (atomic on POSIX filesystems).
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    static std::atomic<unsigned> seq{0};
    fs::path tmp = path;
    tmp += ".tmp" + std::to_string(static_cast<long>(::getpid())) + "_" +
           std::to_string(seq.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out << content;
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw std::runtime_error("write failed: " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

/// The pinned CSV layout, identical for all three solvers.
inline std::string csv_from_rows(const std::vector<DiagnosticsRow>& rows) {
    std::string out = "t,u_min,u_max,mass,R_min,R_max,area,length,gb_residual\n";
    for (const DiagnosticsRow& r : rows) {
        out += fmt17(r.t);
        out += ',';
        out += fmt17(r.u_min);
        out += ',';
        out += fmt17(r.u_max);
        out += ',';
        out += fmt17(r.mass);
        out += ',';
        out += fmt17(r.R_min);
        out += ',';
        out += fmt17(r.R_max);
        out += ',';
        out += fmt17(r.area);
        out += ',';
        out += fmt17(r.length);
        out += ',';
        out += fmt17(r.gb_residual);
        out += '\n';
    }
    return out;
}

struct CheckResult {
    std::string name;
    bool applicable = true;
    bool pass = false;
    double value = 0.0;
    std::string detail;
};

struct FitOutcome {
    FitTask task;
    std::optional<RateFit> fit;
    std::string error;  ///< empty on success
};

struct RunResult {
    Materialized mat;
    Trajectory traj;  ///< for cylinder2d this is the 2D trajectory
    std::optional<CylinderRunReport> cyl;
    std::optional<SingularityReport> singularity;
    std::vector<FitOutcome> fits;
    std::vector<CheckResult> checks;
    double wall_seconds = 0.0;
};

namespace detail {

inline std::vector<std::pair<double, double>> row_series(const Trajectory& traj,
                                                         const std::string& series) {
    std::vector<std::pair<double, double>> out;
    out.reserve(traj.rows.size());
    for (const DiagnosticsRow& r : traj.rows) {
        double v = 0.0;
        if (series == "u_min") v = r.u_min;
        else if (series == "u_max") v = r.u_max;
        else if (series == "mass") v = r.mass;
        else if (series == "area") v = r.area;
        else v = r.length;
        out.emplace_back(r.t, v);
    }
    return out;
}

/// Discrete conservation law: area(t) - area(0) accumulated against the
/// recorded boundary flux with right-endpoint rectangles, which is the form
/// the backward-Euler step satisfies exactly on the interval and the
/// cylinder; the disc stencil satisfies it to O(h^2).  `use_mass` rescales
/// to the mass column (mass/area is a constant per solver).
inline CheckResult check_conservation(const Trajectory& traj, const std::string& name,
                                      bool use_mass, double threshold) {
    CheckResult c;
    c.name = name;
    const auto& rows = traj.rows;
    const double scale = use_mass ? rows.front().mass / rows.front().area : 1.0;
    double cum = 0.0, worst = 0.0, vmax = 0.0;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        cum += (rows[k].t - rows[k - 1].t) * rows[k].boundary_flux;
        const double lhs = use_mass ? rows[k].mass - rows[0].mass : rows[k].area - rows[0].area;
        worst = std::max(worst, std::abs(lhs - cum * scale));
        vmax = std::max(vmax, std::abs(use_mass ? rows[k].mass : rows[k].area));
    }
    c.value = worst / (1.0 + vmax);
    c.pass = c.value <= threshold;
    c.detail = "relative residual of the flux law, threshold " + fmt17(threshold);
    return c;
}

inline CheckResult check_sign(const Trajectory& traj, double h, double dt_max) {
    CheckResult c;
    c.name = "sign_preservation";
    const DiagnosticsRow& r0 = traj.rows.front();
    const double slack = 10.0 * (h * h + dt_max);
    if (r0.lap_w_interior_min > 0.0) {
        double mn = std::numeric_limits<double>::infinity();
        for (const auto& r : traj.rows) mn = std::min(mn, r.lap_w_interior_min);
        c.value = mn;
        c.pass = mn > -slack;
        c.detail = "initially convex log u; min interior Lap(log u) over run, slack " +
                   fmt17(slack);
    } else if (r0.lap_w_interior_max < 0.0) {
        double mx = -std::numeric_limits<double>::infinity();
        for (const auto& r : traj.rows) mx = std::max(mx, r.lap_w_interior_max);
        c.value = mx;
        c.pass = mx < slack;
        c.detail = "initially concave log u; max interior Lap(log u) over run, slack " +
                   fmt17(slack);
    } else {
        c.applicable = false;
        c.pass = true;
        c.detail = "interior Lap(log u) has mixed sign at t = 0";
    }
    return c;
}

inline CheckResult check_gauss_bonnet(const Trajectory& traj, double threshold) {
    CheckResult c;
    c.name = "gauss_bonnet";
    // The residual is a cancellation of the curvature integral against the
    // boundary term, so near an amplitude cap (wall terms ~1e20) its floor
    // is machine epsilon times those terms; normalize per row by the
    // magnitude of what cancels.
    double worst = 0.0;
    for (const auto& r : traj.rows)
        worst = std::max(worst, std::abs(r.gb_residual) / (1.0 + std::abs(r.boundary_flux)));
    c.value = worst;
    c.pass = worst <= threshold;
    c.detail = "max |Gauss-Bonnet residual| / (1 + |boundary term|) over run, threshold " +
               fmt17(threshold);
    return c;
}

/// log L(t) - log L(0) = -(1/2) integral of the boundary curvature, checked
/// with trapezoid accumulation over the first 80% of the run (the boundary
/// curvature is singular at a blow-down time, where quadrature in t is
/// meaningless).
inline CheckResult check_length_law(const Trajectory& traj, double threshold) {
    CheckResult c;
    c.name = "length_law";
    const auto& rows = traj.rows;
    const double cut = rows.front().t + 0.8 * (rows.back().t - rows.front().t);
    double cum = 0.0, worst = 0.0;
    std::size_t used = 1;
    for (std::size_t k = 1; k < rows.size() && rows[k].t <= cut; ++k) {
        cum += 0.5 * (rows[k].r_boundary + rows[k - 1].r_boundary) * (rows[k].t - rows[k - 1].t);
        worst = std::max(worst,
                         std::abs(std::log(rows[k].length / rows[0].length) + 0.5 * cum));
        ++used;
    }
    c.value = worst;
    c.pass = worst <= threshold;
    c.detail = "max |log(L/L0) + (1/2) int r_boundary| over first 80% (" +
               std::to_string(used) + " rows), threshold " + fmt17(threshold);
    return c;
}

inline CheckResult check_flatness(const Trajectory& traj) {
    CheckResult c;
    c.name = "flatness";
    double worst = 0.0;
    for (const auto& r : traj.rows) worst = std::max(worst, r.u_max / r.u_min);
    c.value = worst;
    c.pass = true;  // informational: the interesting bound is scenario-specific
    const auto& rows = traj.rows;
    c.detail = "max u_max/u_min over run; initial " +
               fmt17(rows.front().u_max / rows.front().u_min) + ", final " +
               fmt17(rows.back().u_max / rows.back().u_min);
    return c;
}

inline CheckResult check_mass_bound(const RunResult& res, bool blowdown) {
    CheckResult c;
    c.name = blowdown ? "mass_bound_blowdown" : "mass_bound_blowup";
    const Scenario& scn = res.mat.scn;
    if (scn.solver != SolverKind::line1d) {
        c.applicable = false;
        c.pass = true;
        c.detail = "interval bound; solver is not line1d";
        return c;
    }
    const RobinBoundary& bc = res.mat.bc;
    const bool ok_regime = blowdown ? (bc.p < 1.0 && bc.gamma < 0.0)
                                    : (bc.p > 2.0 && bc.gamma > 0.0);
    if (!ok_regime) {
        c.applicable = false;
        c.pass = true;
        c.detail = blowdown ? "needs p < 1 and gamma < 0" : "needs p > 2 and gamma > 0";
        return c;
    }
    const MassBoundReport rep = blowdown
                                    ? check_mass_bound_blowdown(res.traj, bc, res.mat.dom)
                                    : check_mass_bound_blowup(res.traj, bc, res.mat.dom);
    c.value = rep.min_slack;
    c.pass = rep.min_slack >= -1e-9 && rep.deadline_ok;
    c.detail = "min slack over run; t* = " + fmt17(rep.t_star) +
               (rep.t_est ? ", T_est = " + fmt17(*rep.t_est) : ", no singular event") +
               (rep.sign_condition_held ? "; sign condition held" : "; sign condition VIOLATED");
    return c;
}

inline CheckResult check_envelope(const RunResult& res) {
    CheckResult c;
    c.name = "envelope";
    if (!res.cyl) {
        c.applicable = false;
        c.pass = true;
        c.detail = "1D comparison envelopes exist only for cylinder2d";
        return c;
    }
    c.value = std::min(res.cyl->worst_upper_slack, res.cyl->worst_lower_slack);
    c.pass = res.cyl->envelope_ok;
    c.detail = "worst upper slack " + fmt17(res.cyl->worst_upper_slack) + ", worst lower slack " +
               fmt17(res.cyl->worst_lower_slack);
    return c;
}

}  // namespace detail

/// Execute a scenario: run the solver, then evaluate the requested fits and
/// checks over the recorded diagnostics.
inline RunResult execute(const Scenario& scn) {
    RunResult res;
    res.mat = materialize(scn);
    const auto t_start = std::chrono::steady_clock::now();
    switch (scn.solver) {
        case SolverKind::line1d:
            res.traj = run(res.mat.state, res.mat.bc, res.mat.dom, scn.cfg, scn.t_final,
                           scn.output_times);
            break;
        case SolverKind::disc:
            res.traj = run_disc(res.mat.state, res.mat.dbc, res.mat.rgrid, scn.cfg, scn.t_final,
                                scn.output_times);
            break;
        case SolverKind::cylinder2d:
            res.cyl = run_cylinder(res.mat.state, res.mat.phi, res.mat.cgrid, scn.cfg,
                                   scn.t_final, scn.output_times);
            res.traj = res.cyl->traj;
            break;
    }
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    double p_eff = 1.5;
    if (scn.solver == SolverKind::line1d) p_eff = res.mat.bc.p;
    if (scn.solver == SolverKind::disc && res.mat.dbc.form == DiscBoundary::Form::robin)
        p_eff = res.mat.dbc.p;
    if (res.traj.termination == Termination::blow_up ||
        res.traj.termination == Termination::blow_down)
        res.singularity = detect_singularity(res.traj, p_eff);

    for (const FitTask& task : scn.fits) {
        FitOutcome out;
        out.task = task;
        try {
            out.fit = fit_rate(detail::row_series(res.traj, task.series), task.model, task.t0,
                               task.t1);
        } catch (const std::exception& e) {
            out.error = e.what();
        }
        res.fits.push_back(std::move(out));
    }

    double h = 0.0;
    bool is_disc = scn.solver == SolverKind::disc;
    switch (scn.solver) {
        case SolverKind::line1d: h = res.mat.dom.h(); break;
        case SolverKind::disc: h = res.mat.rgrid.h(); break;
        case SolverKind::cylinder2d: h = res.mat.cgrid.hx(); break;
    }
    for (const std::string& name : scn.checks) {
        if (name == "mass_law")
            res.checks.push_back(detail::check_conservation(res.traj, name, true,
                                                            is_disc ? 10.0 * h * h : 1e-9));
        else if (name == "area_law")
            res.checks.push_back(detail::check_conservation(res.traj, name, false,
                                                            is_disc ? 10.0 * h * h : 1e-9));
        else if (name == "sign_preservation")
            res.checks.push_back(detail::check_sign(res.traj, h, scn.cfg.dt_max));
        else if (name == "gauss_bonnet")
            res.checks.push_back(detail::check_gauss_bonnet(res.traj,
                                                            is_disc ? 50.0 * h * h : 1e-8));
        else if (name == "length_law")
            res.checks.push_back(detail::check_length_law(res.traj,
                                                          2.0 * (h * h + scn.cfg.dt_max)));
        else if (name == "flatness")
            res.checks.push_back(detail::check_flatness(res.traj));
        else if (name == "mass_bound_blowdown")
            res.checks.push_back(detail::check_mass_bound(res, true));
        else if (name == "mass_bound_blowup")
            res.checks.push_back(detail::check_mass_bound(res, false));
        else if (name == "envelope")
            res.checks.push_back(detail::check_envelope(res));
    }
    return res;
}

/// The summary JSON.  Every key is always present; quantities that do not
/// apply are the literal string "not_applicable".
inline ordered_json summary_json(const RunResult& res) {
    const Scenario& scn = res.mat.scn;
    ordered_json j;
    j["name"] = scn.name;
    j["solver"] = to_string(scn.solver);
    ordered_json grid;
    switch (scn.solver) {
        case SolverKind::line1d:
            grid["l"] = res.mat.dom.l;
            grid["n"] = res.mat.dom.n;
            break;
        case SolverKind::disc:
            grid["a"] = res.mat.rgrid.a;
            grid["n"] = res.mat.rgrid.n;
            break;
        case SolverKind::cylinder2d:
            grid["l"] = res.mat.cgrid.l;
            grid["nx"] = res.mat.cgrid.nx;
            grid["ntheta"] = res.mat.cgrid.ntheta;
            break;
    }
    j["grid"] = grid;
    ordered_json bnd;
    switch (scn.solver) {
        case SolverKind::line1d:
            bnd["gamma"] = res.mat.bc.gamma;
            bnd["p"] = res.mat.bc.p;
            break;
        case SolverKind::disc:
            if (res.mat.dbc.form == DiscBoundary::Form::robin) {
                bnd["form"] = "robin";
                bnd["gamma"] = res.mat.dbc.gamma;
                bnd["p"] = res.mat.dbc.p;
            } else {
                bnd["form"] = "curvature";
                bnd["beta"] = res.mat.dbc.beta;
            }
            break;
        case SolverKind::cylinder2d:
            bnd["phi"] = scn.phi_preset;
            bnd["phi_params"] = scn.phi_params;
            bnd["phi_min"] = res.mat.phi.phi_min;
            bnd["phi_max"] = res.mat.phi.phi_max;
            break;
    }
    j["boundary"] = bnd;
    j["termination"] = to_string(res.traj.termination);
    j["t_end"] = res.traj.t_end;
    j["accepted_steps"] = res.traj.accepted_steps;
    j["rejected_steps"] = res.traj.rejected_steps;
    if (res.singularity && res.singularity->T_est)
        j["T_est"] = *res.singularity->T_est;
    else
        j["T_est"] = "not_applicable";

    ordered_json fits = ordered_json::array();
    for (const FitOutcome& f : res.fits) {
        ordered_json e;
        e["series"] = f.task.series;
        e["model"] = to_string(f.task.model);
        e["window"] = {f.task.t0, f.task.t1};
        if (f.fit) {
            e["param"] = f.fit->param;
            e["param2"] = f.fit->param2;
            e["points"] = f.fit->points;
            e["rms_residual"] = f.fit->rms_residual;
            e["error"] = "none";
        } else {
            e["param"] = "not_applicable";
            e["param2"] = "not_applicable";
            e["points"] = 0;
            e["rms_residual"] = "not_applicable";
            e["error"] = f.error;
        }
        fits.push_back(e);
    }
    j["fits"] = fits;

    static const char* kAllChecks[] = {"mass_law",           "area_law",
                                       "sign_preservation",  "gauss_bonnet",
                                       "length_law",         "flatness",
                                       "mass_bound_blowdown", "mass_bound_blowup",
                                       "envelope"};
    ordered_json checks;
    for (const char* name : kAllChecks) {
        const CheckResult* found = nullptr;
        for (const CheckResult& c : res.checks)
            if (c.name == name) found = &c;
        if (found == nullptr) {
            checks[name] = "not_applicable";
        } else {
            ordered_json e;
            e["applicable"] = found->applicable;
            e["pass"] = found->pass;
            e["value"] = found->value;
            e["detail"] = found->detail;
            checks[name] = e;
        }
    }
    j["checks"] = checks;

    if (res.cyl) {
        ordered_json env;
        env["upper_slack"] = res.cyl->worst_upper_slack;
        env["lower_slack"] = res.cyl->worst_lower_slack;
        env["ok"] = res.cyl->envelope_ok;
        j["envelope"] = env;
    } else {
        j["envelope"] = "not_applicable";
    }
    j["wall_time_seconds"] = res.wall_seconds;
    return j;
}

/// run <scenario-file>: writes <name>.csv and <name>.summary.json into the
/// output directory.  Exit 0 on clean completion including expected singular
/// termination; 1 on step_underflow; 2 on parse/validation errors.
inline int cmd_run(const std::string& path) {
    try {
        const Scenario scn = load_scenario(path);
        const RunResult res = execute(scn);
        const std::filesystem::path dir = output_directory();
        write_file_atomic(dir / (scn.name + ".csv"), csv_from_rows(res.traj.rows));
        write_file_atomic(dir / (scn.name + ".summary.json"), summary_json(res).dump(2) + "\n");
        std::printf("%s: %s at t = %s (%ld steps), wrote %s.csv and %s.summary.json in %s\n",
                    scn.name.c_str(), to_string(res.traj.termination), fmt17(res.traj.t_end).c_str(),
                    res.traj.accepted_steps, scn.name.c_str(), scn.name.c_str(),
                    dir.string().c_str());
        bool checks_ok = true;
        for (const CheckResult& c : res.checks) {
            std::printf("  check %-20s %s  value %s\n", c.name.c_str(),
                        !c.applicable ? "n/a " : (c.pass ? "pass" : "FAIL"),
                        fmt17(c.value).c_str());
            checks_ok = checks_ok && (c.pass || !c.applicable);
        }
        for (const FitOutcome& f : res.fits) {
            if (f.fit)
                std::printf("  fit %s %s: param %s (rms %s)\n", f.task.series.c_str(),
                            to_string(f.task.model).c_str(), fmt17(f.fit->param).c_str(),
                            fmt17(f.fit->rms_residual).c_str());
            else
                std::printf("  fit %s %s: error: %s\n", f.task.series.c_str(),
                            to_string(f.task.model).c_str(), f.error.c_str());
        }
        return res.traj.termination == Termination::step_underflow ? 1 : 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

namespace detail {

inline std::string sanitize_value_token(const std::string& v) {
    std::string out;
    for (char c : v) out += (c == '.' ? 'p' : (c == '+' ? '_' : c));
    return out;
}

inline void apply_sweep_value(Scenario& scn, const std::string& param, const std::string& token,
                              double value) {
    if (param == "p") scn.p = value;
    else if (param == "gamma") scn.gamma = value;
    else if (param == "l") {
        scn.l = value;
        scn.a = value;  // the disc's radius plays the role of l
    } else if (param == "n") {
        scn.n = static_cast<int>(value);
        if (scn.n != value) throw std::invalid_argument("sweep n takes integer values");
    } else if (param == "dt_init") {
        scn.cfg.dt_init = value;
    } else {
        throw std::invalid_argument("sweep parameter must be one of p, gamma, l, n, dt_init");
    }
    scn.name += "_" + param + "_" + sanitize_value_token(token);
}

}  // namespace detail

/// sweep <scenario-file> --param <name> --values v1,v2,...: independent
/// concurrent runs, one CSV/summary pair each, plus an aggregate table.
/// A failed run is recorded in the table and the sweep continues.
inline int cmd_sweep(const std::string& path, const std::string& param,
                     const std::string& values_csv) {
    try {
        const Scenario base = load_scenario(path);
        std::vector<std::string> tokens;
        for (const std::string& tok : detail::split_list(values_csv, ','))
            if (!tok.empty()) tokens.push_back(tok);
        if (tokens.empty()) throw std::invalid_argument("sweep: empty values list");

        struct SweepRow {
            std::string value;
            std::string termination;
            std::string t_est = "not_applicable";
            std::string fit_param = "not_applicable";
        };
        std::vector<std::future<SweepRow>> futs;
        for (const std::string& tok : tokens) {
            futs.push_back(std::async(std::launch::async, [&, tok]() -> SweepRow {
                SweepRow row;
                row.value = tok;
                try {
                    Scenario scn = base;
                    detail::apply_sweep_value(scn, param, tok, std::stod(tok));
                    const RunResult res = execute(scn);
                    const std::filesystem::path dir = output_directory();
                    write_file_atomic(dir / (scn.name + ".csv"), csv_from_rows(res.traj.rows));
                    write_file_atomic(dir / (scn.name + ".summary.json"),
                                      summary_json(res).dump(2) + "\n");
                    row.termination = to_string(res.traj.termination);
                    if (res.singularity && res.singularity->T_est)
                        row.t_est = fmt17(*res.singularity->T_est);
                    if (!res.fits.empty() && res.fits.front().fit)
                        row.fit_param = fmt17(res.fits.front().fit->param);
                } catch (const std::exception& e) {
                    row.termination = std::string("error: ") + e.what();
                }
                return row;
            }));
        }
        std::string agg = "value,termination,T_est,fit_param\n";
        bool any_error = false;
        for (std::future<SweepRow>& f : futs) {
            const SweepRow row = f.get();
            any_error = any_error || row.termination.rfind("error:", 0) == 0;
            agg += row.value + "," + row.termination + "," + row.t_est + "," + row.fit_param + "\n";
            std::printf("  %s -> %s (T_est %s)\n", row.value.c_str(), row.termination.c_str(),
                        row.t_est.c_str());
        }
        const std::filesystem::path dir = output_directory();
        write_file_atomic(dir / (base.name + "_sweep_" + param + ".csv"), agg);
        std::printf("wrote %s_sweep_%s.csv in %s\n", base.name.c_str(), param.c_str(),
                    dir.string().c_str());
        return any_error ? 1 : 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

/// compare <fileA> <fileB>: treats A as the lower and B as the upper
/// solution, runs the ordering harness, writes a JSON report.  Exit 0 when
/// the strict ordering held at every shared sample time.
inline int cmd_compare(const std::string& path_a, const std::string& path_b) {
    try {
        const Scenario sa = load_scenario(path_a);
        const Scenario sb = load_scenario(path_b);
        if (sa.solver != SolverKind::line1d || sb.solver != SolverKind::line1d)
            throw std::invalid_argument("compare: both scenarios must use solver = line1d");
        const Materialized ma = materialize(sa);
        const Materialized mb = materialize(sb);
        if (ma.dom.n != mb.dom.n || ma.dom.l != mb.dom.l)
            throw std::invalid_argument("compare: scenarios must share the same grid");
        const double t_final = std::min(sa.t_final, sb.t_final);
        const OrderingReport rep = comparison_harness(ma.state, mb.state, ma.bc, mb.bc, ma.dom,
                                                      sa.cfg, t_final, sa.output_times);
        ordered_json j;
        j["low"] = sa.name;
        j["high"] = sb.name;
        j["t_final"] = t_final;
        j["times_compared"] = rep.times_compared;
        j["min_gap"] = rep.min_gap;
        if (rep.first_violation_t)
            j["first_violation_t"] = *rep.first_violation_t;
        else
            j["first_violation_t"] = "not_applicable";
        const bool ordered = !rep.first_violation_t && rep.min_gap > 0.0;
        j["ordered"] = ordered;
        const std::filesystem::path dir = output_directory();
        write_file_atomic(dir / (sa.name + "_vs_" + sb.name + ".compare.json"),
                          j.dump(2) + "\n");
        std::printf("compare %s < %s: min gap %s over %d shared times -> %s\n", sa.name.c_str(),
                    sb.name.c_str(), fmt17(rep.min_gap).c_str(), rep.times_compared,
                    ordered ? "ordered" : "VIOLATED");
        return ordered ? 0 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

/// fit <csv> --model <m> --window t0,t1 [--column <name>]: rate fit over a
/// CSV produced by cmd_run.  Prints the fit as JSON on stdout.
inline int cmd_fit(const std::string& csv_path, const std::string& model_name,
                   const std::string& window, const std::string& column) {
    try {
        FitModel model;
        if (model_name == "power") model = FitModel::power;
        else if (model_name == "exponential") model = FitModel::exponential;
        else if (model_name == "gaussian_log") model = FitModel::gaussian_log;
        else if (model_name == "linear_vanishing") model = FitModel::linear_vanishing;
        else throw std::invalid_argument("unknown model '" + model_name + "'");
        const std::vector<std::string> wparts = detail::split_list(window, ',');
        if (wparts.size() != 2) throw std::invalid_argument("window must be t0,t1");
        const double t0 = std::stod(wparts[0]);
        const double t1 = std::stod(wparts[1]);

        std::ifstream in(csv_path);
        if (!in) throw std::invalid_argument("cannot open " + csv_path);
        std::string header;
        if (!std::getline(in, header)) throw std::invalid_argument("empty CSV");
        const std::vector<std::string> cols = detail::split_list(header, ',');
        std::size_t col_idx = cols.size();
        for (std::size_t i = 0; i < cols.size(); ++i)
            if (cols[i] == column) col_idx = i;
        if (col_idx == cols.size() || cols.empty() || cols[0] != "t")
            throw std::invalid_argument("CSV must start with a 't' column and contain '" +
                                        column + "'");
        std::vector<std::pair<double, double>> series;
        std::string line;
        int lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (detail::trim(line).empty()) continue;
            const std::vector<std::string> parts = detail::split_list(line, ',');
            if (parts.size() != cols.size())
                throw std::invalid_argument(csv_path + ":" + std::to_string(lineno) +
                                            ": wrong column count");
            series.emplace_back(std::stod(parts[0]), std::stod(parts[col_idx]));
        }
        const RateFit fit = fit_rate(series, model, t0, t1);
        ordered_json j;
        j["column"] = column;
        j["model"] = to_string(fit.model);
        j["window"] = {fit.window_t0, fit.window_t1};
        j["param"] = fit.param;
        j["param2"] = fit.param2;
        j["points"] = fit.points;
        j["rms_residual"] = fit.rms_residual;
        std::printf("%s\n", j.dump(2).c_str());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

}  // namespace logdiff
