#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "efr/evolve.hpp"
#include "efr/grid.hpp"
#include "efr/ops.hpp"

using namespace efr;

namespace {

GeometrySpec open_rect(double lx, double ly) {
    GeometrySpec s = GeometrySpec::channel();
    s.length = lx;
    s.height = ly;
    s.cyl_r = 0.0;
    return s;
}

FlowConfig tgv_config(double nu, double dt) {
    FlowConfig cfg;
    cfg.nu = nu;
    cfg.dt = dt;
    cfg.t_end = 10.0;
    cfg.initial = InitialCondition::taylor_green;
    return cfg;
}

double kinetic_energy(const State& s) { return 0.5 * l2_norm_sq(s.velocity); }

}  // namespace

TEST_CASE("inlet profile matches the benchmark parabola") {
    REQUIRE(inlet_profile(0.0)[0] == 0.0);
    REQUIRE(inlet_profile(0.41)[0] == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(inlet_profile(0.205)[0] == Catch::Approx(1.5).margin(1e-12));
    REQUIRE(inlet_profile(0.205)[1] == 0.0);
}

TEST_CASE("flow config diagnostics") {
    FlowConfig cfg;  // benchmark defaults: U=1, L=0.1, nu=1e-4
    REQUIRE(cfg.reynolds() == Catch::Approx(1000.0));
    REQUIRE(cfg.kolmogorov_eta() == Catch::Approx(5.62e-4).epsilon(1e-3));
}

TEST_CASE("zero state with zero boundary data stays exactly zero") {
    SECTION("periodic") {
        const Grid g(GeometrySpec::box(1.0, 1.0), 16, 16);
        FlowConfig cfg;
        cfg.nu = 0.01;
        State s(g);
        for (int n = 0; n < 3; ++n) {
            s = evolve_step(s, cfg, g);
            for (const double x : s.velocity.u_data()) REQUIRE(x == 0.0);
            for (const double x : s.velocity.v_data()) REQUIRE(x == 0.0);
            for (const double x : s.pressure.data()) REQUIRE(x == 0.0);
        }
    }
    SECTION("channel with zero inlet") {
        const Grid g(open_rect(1.0, 0.5), 16, 8);
        FlowConfig cfg;
        cfg.nu = 0.01;
        cfg.dirichlet = [](double, double, double) { return std::array<double, 2>{0.0, 0.0}; };
        State s(g);
        s = evolve_step(s, cfg, g);
        for (const double x : s.velocity.u_data()) REQUIRE(x == 0.0);
        for (const double x : s.velocity.v_data()) REQUIRE(x == 0.0);
    }
}

TEST_CASE("evolve is deterministic") {
    const Grid g(GeometrySpec::box(2.0 * M_PI, 2.0 * M_PI), 32, 32);
    const FlowConfig cfg = tgv_config(0.05, 1e-2);
    const State s0 = make_initial_state(g, cfg);
    const State a = evolve_step(s0, cfg, g);
    const State b = evolve_step(s0, cfg, g);
    REQUIRE(a.velocity.u_data() == b.velocity.u_data());
    REQUIRE(a.velocity.v_data() == b.velocity.v_data());
    REQUIRE(a.pressure.data() == b.pressure.data());
    REQUIRE(trial_evolve(s0, cfg, g).velocity.u_data() == a.velocity.u_data());
}

TEST_CASE("projection leaves the velocity discretely divergence free") {
    const Grid g(GeometrySpec::box(2.0 * M_PI, 2.0 * M_PI), 64, 64);
    const FlowConfig cfg = tgv_config(0.01, 4e-3);
    State s = make_initial_state(g, cfg);
    for (int n = 0; n < 5; ++n) {
        s = evolve_step(s, cfg, g);
        REQUIRE(avg_abs_divergence(s.velocity) <= 1e-8);
    }
}

TEST_CASE("taylor-green kinetic energy decays at the analytic rate") {
    const Grid g(GeometrySpec::box(2.0 * M_PI, 2.0 * M_PI), 64, 64);
    const double nu = 0.1, dt = 2e-3, T = 0.1;
    const FlowConfig cfg = tgv_config(nu, dt);
    State s = make_initial_state(g, cfg);
    const double e0 = kinetic_energy(s);
    const int steps = static_cast<int>(std::round(T / dt));
    for (int n = 0; n < steps; ++n) s = evolve_step(s, cfg, g);
    const double ratio = kinetic_energy(s) / e0;
    const double exact = std::exp(-4.0 * nu * T);
    REQUIRE(ratio == Catch::Approx(exact).epsilon(5e-3));
}

TEST_CASE("taylor-green temporal convergence is first order") {
    const Grid g(GeometrySpec::box(2.0 * M_PI, 2.0 * M_PI), 64, 64);
    const double nu = 0.5, T = 0.08;
    // signed energy errors cancel the dt-independent spatial bias
    auto energy_error = [&](double dt) {
        const FlowConfig cfg = tgv_config(nu, dt);
        State s = make_initial_state(g, cfg);
        const double e0 = kinetic_energy(s);
        const int steps = static_cast<int>(std::round(T / dt));
        for (int n = 0; n < steps; ++n) s = evolve_step(s, cfg, g);
        return kinetic_energy(s) / e0 - std::exp(-4.0 * nu * T);
    };
    const double e1 = energy_error(4e-3), e2 = energy_error(2e-3), e3 = energy_error(1e-3);
    const double order = std::log2(std::abs((e1 - e2) / (e2 - e3)));
    REQUIRE(order > 0.7);
    REQUIRE(order < 1.3);
}

namespace {

// steady manufactured solution u = (-sin x cos y, cos x sin y) on [0,2pi]^2
// with the forcing that makes it an exact steady NSE solution at p = 0
State mms_exact_state(const Grid& g) {
    State s(g);
    for (int j = 0; j < g.uny(); ++j)
        for (int i = 0; i < g.unx(); ++i)
            s.velocity.u(i, j) = -std::sin(g.u_x(i)) * std::cos(g.u_y(j));
    for (int j = 0; j < g.vny(); ++j)
        for (int i = 0; i < g.vnx(); ++i)
            s.velocity.v(i, j) = std::cos(g.v_x(i)) * std::sin(g.v_y(j));
    return s;
}

double mms_velocity_error(int n, double nu, double dt, int steps) {
    const Grid g(GeometrySpec::box(2.0 * M_PI, 2.0 * M_PI), n, n);
    FlowConfig cfg;
    cfg.nu = nu;
    cfg.dt = dt;
    cfg.t_end = 10.0;
    cfg.forcing = [nu](double x, double y, double) {
        const double fx = 0.5 * std::sin(2.0 * x) - 2.0 * nu * std::sin(x) * std::cos(y);
        const double fy = 0.5 * std::sin(2.0 * y) + 2.0 * nu * std::cos(x) * std::sin(y);
        return std::array<double, 2>{fx, fy};
    };
    State s = mms_exact_state(g);
    for (int k = 0; k < steps; ++k) s = evolve_step(s, cfg, g);
    const State exact = mms_exact_state(g);
    const VectorField diff = lincomb(1.0, s.velocity, -1.0, exact.velocity);
    return std::sqrt(l2_norm_sq(diff) / l2_norm_sq(exact.velocity));
}

}  // namespace

TEST_CASE("manufactured solution shows second-order spatial convergence") {
    const double nu = 0.05, dt = 5e-3;
    const int steps = 20;
    const double e32 = mms_velocity_error(32, nu, dt, steps);
    const double e64 = mms_velocity_error(64, nu, dt, steps);
    const double order = std::log2(e32 / e64);
    REQUIRE(order > 1.7);
    REQUIRE(order < 2.3);
}

TEST_CASE("diffusion-dominated velocity norm is non-increasing") {
    const Grid g(open_rect(1.0, 1.0), 16, 16);
    FlowConfig cfg;
    cfg.nu = 1.0;
    cfg.dt = 1e-2;
    cfg.dirichlet = [](double, double, double) { return std::array<double, 2>{0.0, 0.0}; };
    State s(g);
    // interior bump
    for (int j = 4; j < 12; ++j)
        for (int i = 4; i < 12; ++i) s.velocity.u(i, j) = 1.0;
    double prev = l2_norm_sq(s.velocity);
    for (int n = 0; n < 5; ++n) {
        s = evolve_step(s, cfg, g);
        const double cur = l2_norm_sq(s.velocity);
        REQUIRE(cur <= prev * (1.0 + 1e-12));
        prev = cur;
    }
}

TEST_CASE("evolve rejects NaN input and diverging solves") {
    const Grid g(GeometrySpec::box(1.0, 1.0), 8, 8);
    FlowConfig cfg;
    cfg.nu = 0.01;

    State bad(g);
    bad.velocity.u(2, 2) = std::nan("");
    REQUIRE_THROWS_AS(evolve_step(bad, cfg, g), BlowUp);

    State ok(g);
    ok.velocity.u(2, 2) = 1.0;
    FlowConfig strangled = cfg;
    strangled.max_iter_factor = 0;  // zero iteration budget
    REQUIRE_THROWS_AS(evolve_step(ok, strangled, g), SolverFailure);
}

TEST_CASE("channel inflow develops downstream flow") {
    const Grid g(GeometrySpec::channel(), 64, 12);
    FlowConfig cfg;  // benchmark defaults
    State s(g);
    for (int n = 0; n < 10; ++n) s = evolve_step(s, cfg, g);
    REQUIRE(all_finite(s));
    REQUIRE(l2_norm_sq(s.velocity) > 0.0);
    // inlet faces hold the parabola
    REQUIRE(s.velocity.u(0, g.ny() / 2) > 1.0);
}
