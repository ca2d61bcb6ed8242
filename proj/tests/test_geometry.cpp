#include "logdiff/geometry.hpp"
#include "logdiff/solver1d.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace logdiff;

namespace {

SolutionState sech2_state(const Interval1D& dom, double T) {
    SolutionState s;
    s.t = 0.0;
    s.w.resize(static_cast<std::size_t>(dom.n));
    for (int i = 0; i < dom.n; ++i) {
        const double ch = std::cosh(dom.x(i));
        s.w[i] = std::log(2.0 * T / (ch * ch));
    }
    return s;
}

}  // namespace

TEST_CASE("constant conformal factor: flat geometry quantities") {
    const Interval1D dom{1.0, 65};
    RobinBoundary bc;  // gamma = 0: geodesic walls keep the cylinder flat
    SolutionState s;
    s.w.assign(65, std::log(4.0));  // u = 4
    const double pi = std::acos(-1.0);
    CHECK(area(s, dom) == Catch::Approx(2.0 * pi * 8.0).epsilon(1e-13));          // 2pi int u
    CHECK(boundary_length(s, dom) == Catch::Approx(2.0 * pi * 4.0).epsilon(1e-13));  // 2pi*2*sqrt(u)
    const std::vector<double> R = curvature_field(s, bc, dom);
    for (double r : R) CHECK(std::abs(r) < 1e-12);
    CHECK(std::abs(gauss_bonnet_residual(s, bc, dom)) < 1e-12);
}

TEST_CASE("sech2 state is the round sphere slice: constant curvature 1/T") {
    // u = 2T sech^2 x has R = -(log u)''/u = 1/T everywhere.
    const Interval1D dom{1.0, 129};
    RobinBoundary bc;
    bc.gamma = -std::tanh(1.0);
    bc.p = 1.0;
    const SolutionState s = sech2_state(dom, 1.0);
    const GeometricDiagnostics g = geometric_diagnostics(s, bc, dom);
    // interior nodes carry the O(h^2) stencil error; walls carry the O(h)
    // ghost-row error, so the raw extrema sit within a few percent of 1
    CHECK(g.R_min == Catch::Approx(1.0).margin(0.06));
    CHECK(g.R_max == Catch::Approx(1.0).margin(0.06));
    // the length-law average uses wall extrapolation and is much tighter
    CHECK(g.r_boundary == Catch::Approx(1.0).margin(2e-4));
    CHECK(std::abs(g.gb_residual) < 1e-12);
}

TEST_CASE("Gauss-Bonnet residual telescopes exactly for any state") {
    const Interval1D dom{1.0, 65};
    RobinBoundary bc;
    bc.gamma = 0.7;
    bc.p = 2.5;
    SolutionState s;
    s.w.resize(65);
    for (int i = 0; i < 65; ++i) s.w[i] = std::sin(3.0 * dom.x(i)) + 0.2 * dom.x(i);
    CHECK(std::abs(gauss_bonnet_residual(s, bc, dom)) < 1e-12);
}

TEST_CASE("area-length comparison holds with positive slack on the sphere slice") {
    const Interval1D dom{1.0, 129};
    RobinBoundary bc;
    bc.gamma = -std::tanh(1.0);
    bc.p = 1.0;
    const SolutionState s = sech2_state(dom, 1.0);
    // boundary geodesic curvature k = gamma u^{p - 3/2}; alpha with 10% headroom
    const double k_wall = std::abs(bc.gamma) * std::exp((bc.p - 1.5) * s.w.front());
    const AreaLengthReport rep = area_length_check(s, bc, dom, 1.1 * k_wall);
    REQUIRE(rep.applicable);
    CHECK(rep.holds);
    CHECK(rep.slack > 0.0);
}

TEST_CASE("area-length comparison reports non-applicable for negative curvature") {
    const Interval1D dom{1.0, 65};
    RobinBoundary bc;
    bc.gamma = 1.0;
    bc.p = 1.5;
    SolutionState s;
    s.w.resize(65);
    for (int i = 0; i < 65; ++i) s.w[i] = dom.x(i) * dom.x(i) - 1.0;  // R = -2/u < 0
    const AreaLengthReport rep = area_length_check(s, bc, dom, 10.0);
    CHECK_FALSE(rep.applicable);
    CHECK_THROWS_AS(area_length_check(s, bc, dom, 0.0), std::invalid_argument);
}

TEST_CASE("curvature envelope B/(1 - B t)") {
    CHECK(curvature_envelope(-2.0, 0.0) == Catch::Approx(-2.0));
    CHECK(curvature_envelope(-2.0, 1.0) == Catch::Approx(-2.0 / 3.0));
    // rises monotonically toward zero
    CHECK(curvature_envelope(-2.0, 10.0) > curvature_envelope(-2.0, 1.0));
    CHECK(curvature_envelope(-2.0, 10.0) < 0.0);
    CHECK_THROWS_AS(curvature_envelope(0.5, 1.0), std::invalid_argument);
}

TEST_CASE("example profile is positive with concave-boundary curvature") {
    const MetricProfile mp = example_profile();
    CHECK(mp.l == Catch::Approx(0.74013));
    double fmin = 1e300;
    for (int i = 0; i <= 1000; ++i) {
        const double x = -mp.l + 2.0 * mp.l * i / 1000.0;
        fmin = std::min(fmin, mp.f(x));
    }
    CHECK(fmin > 0.0);
    // f'(l)/f(l): boundary geodesic curvature of the profile metric
    const double k = detail::example_fp(mp.l) / detail::example_f(mp.l);
    CHECK(k == Catch::Approx(-1.736601).margin(1e-5));
}

TEST_CASE("compatible-length equation has no root on the search interval") {
    // The scalar equation dR/dN - kR = 0 for f = cos x - 0.25 x^2 stays
    // positive on (0.5, 1.0) (measured range about [4.9, 60]); the solver
    // reports that honestly instead of inventing a root.
    CHECK_THROWS_AS(find_compatible_length(), std::runtime_error);
}

TEST_CASE("profile-to-conformal transport reproduces the frozen chart") {
    const ConformalData cd = profile_to_conformal(example_profile(), 129);
    CHECK(cd.dom.n == 129);
    CHECK(cd.dom.l == Catch::Approx(0.873595).margin(2e-5));
    CHECK(cd.gamma == Catch::Approx(-1.736601).margin(2e-5));
    double umin = 1e300, umax = -1e300;
    for (double w : cd.state.w) {
        umin = std::min(umin, std::exp(w));
        umax = std::max(umax, std::exp(w));
    }
    CHECK(umin == Catch::Approx(0.361721).margin(2e-4));
    CHECK(umax == Catch::Approx(1.0).margin(2e-4));
    // the chart's own compatibility defect is small and blendable
    RobinBoundary bc;
    bc.gamma = cd.gamma;
    bc.p = 1.5;
    const auto [rl, rr] = compatibility_residual(cd.state, bc, cd.dom);
    CHECK(std::abs(rl) < 5e-4);
    CHECK(std::abs(rr) < 5e-4);
    std::vector<double> prof(cd.state.w.size());
    for (std::size_t i = 0; i < prof.size(); ++i) prof[i] = std::exp(cd.state.w[i]);
    const SolutionState blended = make_compatible_initial_data(prof, bc, cd.dom, 0.2 * cd.dom.l);
    const auto [bl, br] = compatibility_residual(blended, bc, cd.dom);
    CHECK(std::abs(bl) < 1e-12);
    CHECK(std::abs(br) < 1e-12);
}

TEST_CASE("geometric diagnostics agree with the solver's recorded row") {
    const Interval1D dom{1.0, 65};
    RobinBoundary bc;
    bc.gamma = 1.0;
    bc.p = 1.5;
    SolutionState s;
    s.w.resize(65);
    for (int i = 0; i < 65; ++i) s.w[i] = dom.x(i) * dom.x(i) - 1.0;
    const GeometricDiagnostics g = geometric_diagnostics(s, bc, dom);
    const LineProblem prob(dom, bc, nullptr, nullptr);
    const DiagnosticsRow row = prob.diagnostics(s.w, 0.0);
    CHECK(g.R_min == Catch::Approx(row.R_min).epsilon(1e-13));
    CHECK(g.R_max == Catch::Approx(row.R_max).epsilon(1e-13));
    CHECK(g.A == Catch::Approx(row.area).epsilon(1e-13));
    CHECK(g.L == Catch::Approx(row.length).epsilon(1e-13));
    CHECK(g.r_boundary == Catch::Approx(row.r_boundary).epsilon(1e-13));
    CHECK(g.gb_residual == Catch::Approx(row.gb_residual).margin(1e-13));
}
