#include "logdiff/disc.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace logdiff;

namespace {

SolutionState hemisphere_state(const RadialGrid& grid, double t, double T) {
    SolutionState s;
    s.t = t;
    s.w.resize(static_cast<std::size_t>(grid.n));
    for (int i = 0; i < grid.n; ++i) s.w[i] = std::log(hemisphere_oracle(grid.r(i), t, T));
    return s;
}

double static_pde_residual(int n) {
    const RadialGrid grid{1.0, n};
    const DiscBoundary bcd = DiscBoundary::curvature_form(0.0);
    const SolutionState s = hemisphere_state(grid, 0.0, 1.0);
    const std::vector<double> lap = apply_radial_log_diffusion(s, bcd, grid);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const double rr = grid.r(i);
        const double ut = -8.0 / ((1.0 + rr * rr) * (1.0 + rr * rr));
        worst = std::max(worst, std::abs(lap[i] - ut));
    }
    return worst;
}

}  // namespace

TEST_CASE("boundary forms expose the right rim slopes") {
    const DiscBoundary robin = DiscBoundary::robin_form(-0.5, 1.0);
    CHECK(robin.rim_slope(std::log(0.05), 1.0) == Catch::Approx(-1.0));  // p = 1: state-free
    const DiscBoundary geo = DiscBoundary::curvature_form(0.0);
    // geodesic rim: d(log u)/dr = -2/a regardless of the state
    CHECK(geo.rim_slope(0.37, 2.0) == Catch::Approx(-1.0));
    CHECK(geo.rim_slope(-1.2, 1.0) == Catch::Approx(-2.0));
}

TEST_CASE("hemisphere is a discrete solution up to truncation") {
    // Frozen residuals 1.0539e-2 / 5.2389e-3 / 2.6118e-3 at n = 65/129/257;
    // first-order overall because the rim ghost row is O(h).
    const double e65 = static_pde_residual(65);
    const double e129 = static_pde_residual(129);
    const double e257 = static_pde_residual(257);
    CHECK(e65 == Catch::Approx(1.0539e-2).epsilon(0.02));
    CHECK(e129 == Catch::Approx(5.2389e-3).epsilon(0.02));
    CHECK(e257 == Catch::Approx(2.6118e-3).epsilon(0.02));
    CHECK(e65 / e129 == Catch::Approx(2.0).margin(0.1));
    CHECK(e129 / e257 == Catch::Approx(2.0).margin(0.1));
}

TEST_CASE("origin row is second order despite the coordinate singularity") {
    const RadialGrid grid{1.0, 129};
    const DiscBoundary bcd = DiscBoundary::curvature_form(0.0);
    const SolutionState s = hemisphere_state(grid, 0.0, 1.0);
    const std::vector<double> lap = apply_radial_log_diffusion(s, bcd, grid);
    // exact du/dt at the origin is -8
    CHECK(lap[0] == Catch::Approx(-8.0).margin(5e-3));
}

TEST_CASE("static Gauss-Bonnet residual scales quadratically") {
    // Frozen: -1.529752e-3 / -3.829812e-4 / -9.581047e-5 at n = 65/129/257.
    const DiscBoundary bcd = DiscBoundary::curvature_form(0.0);
    auto gb_at = [&](int n) {
        const RadialGrid grid{1.0, n};
        const SolutionState s = hemisphere_state(grid, 0.0, 1.0);
        const std::vector<double> lap = apply_radial_log_diffusion(s, bcd, grid);
        return DiscProblem(grid, bcd).diagnostics(s.w, 0.0, lap).gb_residual;
    };
    const double g65 = gb_at(65);
    const double g129 = gb_at(129);
    const double g257 = gb_at(257);
    CHECK(g65 == Catch::Approx(-1.529752e-3).epsilon(0.01));
    CHECK(g129 == Catch::Approx(-3.829812e-4).epsilon(0.01));
    CHECK(g257 == Catch::Approx(-9.581047e-5).epsilon(0.01));
    CHECK(g65 / g129 == Catch::Approx(4.0).margin(0.1));
    CHECK(g129 / g257 == Catch::Approx(4.0).margin(0.1));
}

TEST_CASE("rim blend repairs the hemisphere's discretization residual") {
    const RadialGrid grid{1.0, 129};
    const DiscBoundary bcd = DiscBoundary::curvature_form(0.0);
    const SolutionState raw = hemisphere_state(grid, 0.0, 1.0);
    const double res_raw = disc_compatibility_residual(raw, bcd, grid);
    CHECK(std::abs(res_raw) == Catch::Approx(4.141e-5).epsilon(0.05));
    std::vector<double> prof(raw.w.size());
    for (std::size_t i = 0; i < prof.size(); ++i) prof[i] = std::exp(raw.w[i]);
    const SolutionState blended = make_compatible_radial_data(prof, bcd, grid, 0.25);
    CHECK(std::abs(disc_compatibility_residual(blended, bcd, grid)) < 1e-12);
}

TEST_CASE("hemisphere run: uniform vanishing at the analytic time") {
    const RadialGrid grid{1.0, 129};
    const DiscBoundary bcd = DiscBoundary::curvature_form(0.0);
    std::vector<double> prof(static_cast<std::size_t>(grid.n));
    for (int i = 0; i < grid.n; ++i) prof[i] = hemisphere_oracle(grid.r(i), 0.0, 1.0);
    const SolutionState u0 = make_compatible_radial_data(prof, bcd, grid, 0.25);
    const Trajectory traj = run_disc(u0, bcd, grid, SolverConfig{}, 2.0);
    REQUIRE(traj.termination == Termination::blow_down);
    CHECK(traj.t_end == Catch::Approx(1.0).margin(1e-3));
    const SingularityReport rep = detect_singularity(traj, 1.5);
    REQUIRE(rep.T_est.has_value());
    CHECK(*rep.T_est == Catch::Approx(1.0).margin(1e-3));

    const double pi = std::acos(-1.0);
    SECTION("w_min and w_max both decay like T - t") {
        for (const DiagnosticsRow& r : traj.rows) {
            if (r.t >= 0.999) continue;  // the discrete T differs from 1 by O(h^2)
            CHECK(r.u_min / (1.0 - r.t) == Catch::Approx(2.0).margin(0.02));
            if (r.t < 0.9) CHECK(r.u_max / (1.0 - r.t) == Catch::Approx(8.0).margin(0.01));
        }
    }
    SECTION("area shrinks linearly: A = 4 pi (T - t)") {
        CHECK(traj.rows.front().area == Catch::Approx(4.0 * pi).margin(1e-3));
        for (const DiagnosticsRow& r : traj.rows) {
            if (r.t > 0.9) continue;
            CHECK(r.area / (1.0 - r.t) == Catch::Approx(4.0 * pi).margin(5e-3));
        }
    }
    SECTION("disc mass law holds only to truncation order") {
        double cum = 0.0, worst = 0.0;
        const auto& rows = traj.rows;
        for (std::size_t k = 1; k < rows.size() && rows[k].t <= 0.5; ++k) {
            cum += (rows[k].t - rows[k - 1].t) * rows[k].boundary_flux;
            worst = std::max(worst, std::abs(rows[k].mass - rows[0].mass - cum));
        }
        CHECK(worst < 5e-4);  // O(h^2): the radial stencil does not telescope
    }
}

TEST_CASE("small data blows down quickly (robin rim)") {
    // 0 < u0 < eps forces finite-time vanishing; frozen t_end = 0.0251 with
    // final flatness 1.7778.
    const RadialGrid grid{1.0, 129};
    const DiscBoundary bcd = DiscBoundary::robin_form(-0.5, 1.0);
    std::vector<double> prof(static_cast<std::size_t>(grid.n), 0.05);
    const SolutionState u0 = make_compatible_radial_data(prof, bcd, grid, 0.25);
    SolverConfig cfg;
    cfg.blow_down_threshold = 1e-8;
    const Trajectory traj = run_disc(u0, bcd, grid, cfg, 20.0);
    REQUIRE(traj.termination == Termination::blow_down);
    CHECK(traj.t_end > 0.02);
    CHECK(traj.t_end < 0.03);
    const DiagnosticsRow& last = traj.rows.back();
    CHECK(last.u_max / last.u_min == Catch::Approx(1.7778).margin(0.08));
}

TEST_CASE("run_disc rejects incompatible rim data") {
    const RadialGrid grid{1.0, 65};
    const DiscBoundary bcd = DiscBoundary::robin_form(-0.5, 1.0);
    SolutionState s;
    s.w.assign(65, 0.0);  // rim slope 0, target -1
    CHECK_THROWS_AS(run_disc(s, bcd, grid, SolverConfig{}, 1.0), std::invalid_argument);
}

TEST_CASE("radial grid validation") {
    CHECK_THROWS_AS((RadialGrid{0.0, 65}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((RadialGrid{1.0, 2}.validate()), std::invalid_argument);
    CHECK_NOTHROW(RadialGrid{2.5, 33}.validate());
}
