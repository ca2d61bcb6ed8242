#pragma once

/// Scenario files: the plain-text schema that drives the CLI.  One
/// `key = value` pair per line, `#` comments, blank lines ignored.  Keys:
///
///   name            run name (output file stem)                 [required]
///   solver          line1d | disc | cylinder2d                  [required]
///   l, n            interval half-length and node count         (line1d)
///   a, n            disc radius and radial node count           (disc)
///   l, nx, ntheta   cylinder half-length and grid               (cylinder2d)
///   gamma, p        flux parameters du/dN = 2 gamma u^p         (line1d, disc robin)
///   form            robin | curvature                           (disc)
///   beta            rim curvature parameter (curvature form)    (disc)
///   phi             constant(c) | sincos(c0, c1)                (cylinder2d)
///                   sincos(c0,c1) means c0 + c1 sin(theta) cos(t)
///   initial         constant(c) | log_quadratic(a, b) | sech2(c, T) |
///                   hemisphere(T) | example_metric | custom
///   values          whitespace-separated node values            (initial = custom)
///   blend_width     collar width for automatic compatibility    (default l/4 or a/4)
///   t_final         integration horizon                         [required]
///   output_times    linspace(t0, t1, k) | logspace(e0, e1, k) | list(v, ...)
///   fits            comma list of series:model:t0:t1 with series in
///                   {u_min, u_max, mass, area, length} and model in
///                   {power, exponential, gaussian_log, linear_vanishing}
///   checks          comma list of mass_law, sign_preservation, gauss_bonnet,
///                   area_law, length_law, flatness, mass_bound_blowdown,
///                   mass_bound_blowup, envelope
///   dt_init, dt_min, dt_max, newton_tol, newton_max_iter,
///   step_rel_change, blow_up_threshold, blow_down_threshold
///                   solver configuration overrides
///
/// Initial data that misses the compatibility condition by 1e-8 or more is
/// blended to compatibility automatically (collar construction, wall values
/// preserved).  `example_metric` derives l and gamma from the stored profile
/// and overrides whatever the file says for those two keys.

#include "core.hpp"
#include "solver1d.hpp"
#include "geometry.hpp"
#include "disc.hpp"
#include "cylinder2d.hpp"
#include "analysis.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace logdiff {

enum class SolverKind { line1d, disc, cylinder2d };

inline const char* to_string(SolverKind s) {
    switch (s) {
        case SolverKind::line1d: return "line1d";
        case SolverKind::disc: return "disc";
        case SolverKind::cylinder2d: return "cylinder2d";
    }
    return "?";
}

struct FitTask {
    std::string series;  ///< u_min | u_max | mass | area | length
    FitModel model = FitModel::power;
    double t0 = 0.0;
    double t1 = 0.0;
};

struct Scenario {
    std::string name;
    SolverKind solver = SolverKind::line1d;

    double l = 1.0;
    int n = 129;
    double a = 1.0;
    int nx = 65;
    int ntheta = 32;

    double gamma = 0.0;
    double p = 1.0;
    std::string form = "robin";
    double beta = 0.0;
    std::string phi_preset = "constant";
    std::vector<double> phi_params{0.0};

    std::string initial;
    std::vector<double> initial_params;
    std::vector<double> custom_values;
    double blend_width = 0.0;  ///< 0 = pick a default

    SolverConfig cfg;
    double t_final = 0.0;
    std::vector<double> output_times;
    std::vector<FitTask> fits;
    std::vector<std::string> checks;
};

/// Parse or validation failure, prefixed with file:line context.
struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] inline void fail_at(const std::string& file, int line, const std::string& msg) {
    throw ScenarioError(file + ":" + std::to_string(line) + ": " + msg);
}

inline double parse_double(const std::string& file, int line, const std::string& s) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail_at(file, line, "not a number: '" + s + "'");
    }
}

inline int parse_int(const std::string& file, int line, const std::string& s) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail_at(file, line, "not an integer: '" + s + "'");
    }
}

/// Split "fn(a, b, c)" into {"fn", {"a","b","c"}}; a bare word has no args.
inline std::pair<std::string, std::vector<std::string>> parse_call(const std::string& file,
                                                                   int line,
                                                                   const std::string& s) {
    const std::size_t open = s.find('(');
    if (open == std::string::npos) return {trim(s), {}};
    if (s.back() != ')') fail_at(file, line, "missing ')' in '" + s + "'");
    const std::string fn = trim(s.substr(0, open));
    const std::string inner = s.substr(open + 1, s.size() - open - 2);
    std::vector<std::string> args;
    std::string cur;
    for (char c : inner) {
        if (c == ',') {
            args.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty() || !args.empty()) args.push_back(trim(cur));
    return {fn, args};
}

inline std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == sep && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty()) out.push_back(trim(cur));
    return out;
}

inline FitModel parse_model(const std::string& file, int line, const std::string& s) {
    if (s == "power") return FitModel::power;
    if (s == "exponential") return FitModel::exponential;
    if (s == "gaussian_log") return FitModel::gaussian_log;
    if (s == "linear_vanishing") return FitModel::linear_vanishing;
    fail_at(file, line, "unknown fit model '" + s + "'");
}

}  // namespace detail

inline Scenario parse_scenario(std::istream& in, const std::string& filename) {
    using detail::fail_at;
    Scenario scn;
    std::map<std::string, int> seen;
    std::string raw;
    int lineno = 0;
    bool have_solver = false, have_tfinal = false;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail_at(filename, lineno, "expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty()) fail_at(filename, lineno, "empty key");
        if (val.empty()) fail_at(filename, lineno, "empty value for '" + key + "'");
        if (seen.count(key)) fail_at(filename, lineno, "duplicate key '" + key + "'");
        seen[key] = lineno;

        if (key == "name") {
            for (char c : val)
                if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
                    fail_at(filename, lineno, "name must be [A-Za-z0-9_-]");
            scn.name = val;
        } else if (key == "solver") {
            if (val == "line1d") scn.solver = SolverKind::line1d;
            else if (val == "disc") scn.solver = SolverKind::disc;
            else if (val == "cylinder2d") scn.solver = SolverKind::cylinder2d;
            else fail_at(filename, lineno, "unknown solver '" + val + "'");
            have_solver = true;
        } else if (key == "l") {
            scn.l = detail::parse_double(filename, lineno, val);
        } else if (key == "n") {
            scn.n = detail::parse_int(filename, lineno, val);
        } else if (key == "a") {
            scn.a = detail::parse_double(filename, lineno, val);
        } else if (key == "nx") {
            scn.nx = detail::parse_int(filename, lineno, val);
        } else if (key == "ntheta") {
            scn.ntheta = detail::parse_int(filename, lineno, val);
        } else if (key == "gamma") {
            scn.gamma = detail::parse_double(filename, lineno, val);
        } else if (key == "p") {
            scn.p = detail::parse_double(filename, lineno, val);
        } else if (key == "form") {
            if (val != "robin" && val != "curvature")
                fail_at(filename, lineno, "form must be robin or curvature");
            scn.form = val;
        } else if (key == "beta") {
            scn.beta = detail::parse_double(filename, lineno, val);
        } else if (key == "phi") {
            auto [fn, args] = detail::parse_call(filename, lineno, val);
            if (fn == "constant") {
                if (args.size() != 1) fail_at(filename, lineno, "phi constant(c) takes 1 argument");
                scn.phi_preset = "constant";
                scn.phi_params = {detail::parse_double(filename, lineno, args[0])};
            } else if (fn == "sincos") {
                if (args.size() != 2)
                    fail_at(filename, lineno, "phi sincos(c0, c1) takes 2 arguments");
                scn.phi_preset = "sincos";
                scn.phi_params = {detail::parse_double(filename, lineno, args[0]),
                                  detail::parse_double(filename, lineno, args[1])};
            } else {
                fail_at(filename, lineno, "unknown phi preset '" + fn + "'");
            }
        } else if (key == "initial") {
            auto [fn, args] = detail::parse_call(filename, lineno, val);
            scn.initial = fn;
            scn.initial_params.clear();
            for (const std::string& a2 : args)
                scn.initial_params.push_back(detail::parse_double(filename, lineno, a2));
        } else if (key == "values") {
            std::istringstream vs(val);
            double v;
            scn.custom_values.clear();
            while (vs >> v) scn.custom_values.push_back(v);
            if (!vs.eof()) fail_at(filename, lineno, "values must be numbers");
        } else if (key == "blend_width") {
            scn.blend_width = detail::parse_double(filename, lineno, val);
        } else if (key == "t_final") {
            scn.t_final = detail::parse_double(filename, lineno, val);
            have_tfinal = true;
        } else if (key == "output_times") {
            auto [fn, args] = detail::parse_call(filename, lineno, val);
            if (fn == "linspace" || fn == "logspace") {
                if (args.size() != 3)
                    fail_at(filename, lineno, fn + "(a, b, k) takes 3 arguments");
                const double a0 = detail::parse_double(filename, lineno, args[0]);
                const double b0 = detail::parse_double(filename, lineno, args[1]);
                const int k = detail::parse_int(filename, lineno, args[2]);
                if (k < 2) fail_at(filename, lineno, fn + " needs k >= 2");
                for (int i = 0; i < k; ++i) {
                    const double s = a0 + (b0 - a0) * static_cast<double>(i) / (k - 1);
                    scn.output_times.push_back(fn == "linspace" ? s : std::pow(10.0, s));
                }
            } else if (fn == "list") {
                for (const std::string& a2 : args)
                    scn.output_times.push_back(detail::parse_double(filename, lineno, a2));
            } else {
                fail_at(filename, lineno, "output_times must be linspace/logspace/list");
            }
        } else if (key == "fits") {
            for (const std::string& item : detail::split_list(val, ',')) {
                const std::vector<std::string> parts = detail::split_list(item, ':');
                if (parts.size() != 4)
                    fail_at(filename, lineno, "fit entry must be series:model:t0:t1");
                FitTask task;
                task.series = parts[0];
                if (task.series != "u_min" && task.series != "u_max" && task.series != "mass" &&
                    task.series != "area" && task.series != "length")
                    fail_at(filename, lineno, "unknown fit series '" + task.series + "'");
                task.model = detail::parse_model(filename, lineno, parts[1]);
                task.t0 = detail::parse_double(filename, lineno, parts[2]);
                task.t1 = detail::parse_double(filename, lineno, parts[3]);
                if (!(task.t0 < task.t1)) fail_at(filename, lineno, "fit window needs t0 < t1");
                scn.fits.push_back(task);
            }
        } else if (key == "checks") {
            for (const std::string& item : detail::split_list(val, ',')) {
                static const char* known[] = {"mass_law",           "sign_preservation",
                                              "gauss_bonnet",       "area_law",
                                              "length_law",         "flatness",
                                              "mass_bound_blowdown", "mass_bound_blowup",
                                              "envelope"};
                bool ok = false;
                for (const char* k2 : known) ok = ok || item == k2;
                if (!ok) fail_at(filename, lineno, "unknown check '" + item + "'");
                scn.checks.push_back(item);
            }
        } else if (key == "dt_init") {
            scn.cfg.dt_init = detail::parse_double(filename, lineno, val);
        } else if (key == "dt_min") {
            scn.cfg.dt_min = detail::parse_double(filename, lineno, val);
        } else if (key == "dt_max") {
            scn.cfg.dt_max = detail::parse_double(filename, lineno, val);
        } else if (key == "newton_tol") {
            scn.cfg.newton_tol = detail::parse_double(filename, lineno, val);
        } else if (key == "newton_max_iter") {
            scn.cfg.newton_max_iter = detail::parse_int(filename, lineno, val);
        } else if (key == "step_rel_change") {
            scn.cfg.step_rel_change = detail::parse_double(filename, lineno, val);
        } else if (key == "blow_up_threshold") {
            scn.cfg.blow_up_threshold = detail::parse_double(filename, lineno, val);
        } else if (key == "blow_down_threshold") {
            scn.cfg.blow_down_threshold = detail::parse_double(filename, lineno, val);
        } else {
            fail_at(filename, lineno, "unknown key '" + key + "'");
        }
    }
    if (scn.name.empty()) fail_at(filename, lineno, "missing required key 'name'");
    if (!have_solver) fail_at(filename, lineno, "missing required key 'solver'");
    if (!have_tfinal) fail_at(filename, lineno, "missing required key 't_final'");
    if (scn.initial.empty()) fail_at(filename, lineno, "missing required key 'initial'");
    if (!(scn.t_final > 0.0)) fail_at(filename, lineno, "t_final must be positive");
    return scn;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError(path + ": cannot open scenario file");
    return parse_scenario(in, path);
}

/// A scenario with its initial data and boundary objects realized.
struct Materialized {
    Scenario scn;
    SolutionState state;
    // line1d (dom.l and bc.gamma may come from the initial-data preset)
    Interval1D dom{1.0, 3};
    RobinBoundary bc{0.0, 1.0};
    // disc
    RadialGrid rgrid{1.0, 3};
    DiscBoundary dbc;
    // cylinder2d
    CylinderGrid cgrid;
    BoundaryCurvature phi;
};

namespace detail {

inline BoundaryCurvature build_phi(const Scenario& scn) {
    BoundaryCurvature phi;
    if (scn.phi_preset == "constant") {
        const double c = scn.phi_params.at(0);
        phi.phi = [c](double, double, double) { return c; };
        phi.phi_min = phi.phi_max = c;
    } else {  // sincos: c0 + c1 sin(theta) cos(t)
        const double c0 = scn.phi_params.at(0);
        const double c1 = scn.phi_params.at(1);
        phi.phi = [c0, c1](double, double theta, double t) {
            return c0 + c1 * std::sin(theta) * std::cos(t);
        };
        phi.phi_min = c0 - std::abs(c1);
        phi.phi_max = c0 + std::abs(c1);
    }
    return phi;
}

}  // namespace detail

/// Build the initial state (blending to compatibility when needed) and the
/// solver-specific domain/boundary objects.  Throws ScenarioError on
/// schema-level mistakes (wrong preset for the solver, missing values, ...).
inline Materialized materialize(const Scenario& scn) {
    Materialized m;
    m.scn = scn;
    auto bad = [&](const std::string& msg) -> void { throw ScenarioError(scn.name + ": " + msg); };

    auto profile_1d = [&](const Interval1D& dom) -> std::vector<double> {
        std::vector<double> u(static_cast<std::size_t>(dom.n));
        if (scn.initial == "constant") {
            if (scn.initial_params.size() != 1) bad("initial constant(c) takes 1 parameter");
            for (double& v : u) v = scn.initial_params[0];
        } else if (scn.initial == "log_quadratic") {
            if (scn.initial_params.size() != 2) bad("initial log_quadratic(a, b) takes 2 parameters");
            for (int i = 0; i < dom.n; ++i) {
                const double x = dom.x(i);
                u[static_cast<std::size_t>(i)] =
                    std::exp(scn.initial_params[0] * x * x + scn.initial_params[1]);
            }
        } else if (scn.initial == "sech2") {
            if (scn.initial_params.size() != 2) bad("initial sech2(c, T) takes 2 parameters");
            const double c = scn.initial_params[0], T = scn.initial_params[1];
            if (!(c > 0.0 && T > 0.0)) bad("sech2 needs c > 0 and T > 0");
            for (int i = 0; i < dom.n; ++i) {
                const double s = 1.0 / std::cosh(c * dom.x(i));
                u[static_cast<std::size_t>(i)] = 2.0 * c * c * T * s * s;
            }
        } else if (scn.initial == "custom") {
            if (scn.custom_values.size() != static_cast<std::size_t>(dom.n))
                bad("custom initial data needs exactly n values");
            u = scn.custom_values;
        } else {
            bad("initial preset '" + scn.initial + "' is not valid for line1d");
        }
        return u;
    };

    if (scn.solver == SolverKind::line1d) {
        if (scn.initial == "example_metric") {
            const ConformalData cd = profile_to_conformal(example_profile(), scn.n);
            m.dom = cd.dom;
            m.bc = RobinBoundary{cd.gamma, scn.p};
            m.state = cd.state;
        } else {
            m.dom = Interval1D{scn.l, scn.n};
            m.dom.validate();
            m.bc = RobinBoundary{scn.gamma, scn.p};
            m.state.t = 0.0;
            std::vector<double> u = profile_1d(m.dom);
            m.state.w.resize(u.size());
            for (std::size_t i = 0; i < u.size(); ++i) {
                if (!(u[i] > 0.0)) bad("initial data must be positive");
                m.state.w[i] = std::log(u[i]);
            }
        }
        const auto [rl, rr] = compatibility_residual(m.state, m.bc, m.dom);
        if (std::abs(rl) >= 1e-8 || std::abs(rr) >= 1e-8) {
            const double bw = scn.blend_width > 0.0 ? scn.blend_width : 0.25 * m.dom.l;
            std::vector<double> u(m.state.w.size());
            for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::exp(m.state.w[i]);
            m.state = make_compatible_initial_data(u, m.bc, m.dom, bw);
        }
        return m;
    }

    if (scn.solver == SolverKind::disc) {
        m.rgrid = RadialGrid{scn.a, scn.n};
        m.rgrid.validate();
        if (scn.form == "robin") {
            m.dbc = DiscBoundary::robin_form(scn.gamma, scn.p);
        } else {
            m.dbc = DiscBoundary::curvature_form(scn.beta);
        }
        std::vector<double> u(static_cast<std::size_t>(scn.n));
        if (scn.initial == "constant") {
            if (scn.initial_params.size() != 1) bad("initial constant(c) takes 1 parameter");
            for (double& v : u) v = scn.initial_params[0];
        } else if (scn.initial == "hemisphere") {
            if (scn.initial_params.size() != 1) bad("initial hemisphere(T) takes 1 parameter");
            for (int i = 0; i < scn.n; ++i)
                u[static_cast<std::size_t>(i)] = hemisphere_oracle(m.rgrid.r(i), 0.0,
                                                                   scn.initial_params[0]);
        } else if (scn.initial == "custom") {
            if (scn.custom_values.size() != static_cast<std::size_t>(scn.n))
                bad("custom initial data needs exactly n values");
            u = scn.custom_values;
        } else {
            bad("initial preset '" + scn.initial + "' is not valid for disc");
        }
        for (double v : u)
            if (!(v > 0.0)) bad("initial data must be positive");
        m.state.t = 0.0;
        m.state.w.resize(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) m.state.w[i] = std::log(u[i]);
        if (std::abs(disc_compatibility_residual(m.state, m.dbc, m.rgrid)) >= 1e-8) {
            const double bw = scn.blend_width > 0.0 ? scn.blend_width : 0.25 * scn.a;
            m.state = make_compatible_radial_data(u, m.dbc, m.rgrid, bw);
        }
        return m;
    }

    // cylinder2d
    m.cgrid = CylinderGrid{scn.l, scn.nx, scn.ntheta};
    m.cgrid.validate();
    m.phi = detail::build_phi(scn);
    std::vector<double> u(m.cgrid.size());
    if (scn.initial == "constant") {
        if (scn.initial_params.size() != 1) bad("initial constant(c) takes 1 parameter");
        for (double& v : u) v = scn.initial_params[0];
    } else if (scn.initial == "custom") {
        if (scn.custom_values.size() != m.cgrid.size())
            bad("custom initial data needs exactly nx*ntheta values");
        u = scn.custom_values;
    } else {
        bad("initial preset '" + scn.initial + "' is not valid for cylinder2d");
    }
    for (double v : u)
        if (!(v > 0.0)) bad("initial data must be positive");
    m.state.t = 0.0;
    m.state.w.resize(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) m.state.w[i] = std::log(u[i]);
    const auto [rl, rr] = cylinder_compatibility_residual(m.state, m.phi, m.cgrid);
    if (std::abs(rl) >= 1e-8 || std::abs(rr) >= 1e-8) {
        const double bw = scn.blend_width > 0.0 ? scn.blend_width : 0.25 * scn.l;
        m.state = make_compatible_cylinder_data(u, m.phi, m.cgrid, bw);
    }
    return m;
}

}  // namespace logdiff
