#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "efr/metrics.hpp"
#include "efr/orchestrate.hpp"

using namespace efr;

namespace {

RunConfig tiny_tgv(int nx, int fine_mult) {
    RunConfig cfg = RunConfig::defaults();
    cfg.geometry = GeometrySpec::box(2.0 * M_PI, 2.0 * M_PI);
    cfg.nx = cfg.ny = nx;
    cfg.fine_nx = cfg.fine_ny = nx * fine_mult;
    cfg.flow.nu = 0.02;
    cfg.flow.dt = 1e-2;
    cfg.flow.t0 = 0.0;
    cfg.flow.t_end = 0.2;  // 20 steps
    cfg.flow.initial = InitialCondition::taylor_green;
    cfg.delta0 = 0.05;
    cfg.chi0 = 0.05;
    cfg.bounds = Bounds::rect(1e-3, 0.5, 0.0, 1.0);
    return cfg;
}

}  // namespace

TEST_CASE("run_dns basics") {
    SECTION("zero-length interval stores only the initial snapshot") {
        RunConfig cfg = tiny_tgv(16, 2);
        cfg.flow.t_end = cfg.flow.t0 + 0.5 * cfg.flow.dt;  // rounds to zero steps
        const ReferenceSeries ref = run_dns(cfg);
        REQUIRE(ref.snaps.size() == 1);
        REQUIRE(ref.snaps[0].time == cfg.flow.t0);
    }
    SECTION("fine == coarse reproduces the plain noEFR snapshots") {
        RunConfig cfg = tiny_tgv(16, 1);
        const ReferenceSeries ref = run_dns(cfg);

        RunConfig base = cfg;
        base.variant = RunVariant::no_efr;
        const RunResult run = run_baseline(base);
        REQUIRE(ref.snaps.size() == run.snaps.size());
        for (std::size_t k = 0; k < ref.snaps.size(); ++k) {
            REQUIRE(ref.snaps[k].velocity.u_data() == run.snaps[k].velocity.u_data());
            REQUIRE(ref.snaps[k].pressure.data() == run.snaps[k].pressure.data());
        }
    }
    SECTION("taylor-green kinetic energy series decays monotonically") {
        const ReferenceSeries ref = run_dns(tiny_tgv(16, 2));
        double prev = l2_norm_sq(ref.snaps[0].velocity);
        for (std::size_t k = 1; k < ref.snaps.size(); ++k) {
            const double cur = l2_norm_sq(ref.snaps[k].velocity);
            REQUIRE(cur <= prev * (1.0 + 1e-12));
            prev = cur;
        }
    }
}

TEST_CASE("run_baseline variants") {
    RunConfig cfg = tiny_tgv(16, 1);

    SECTION("standard_efr with chi = 0 is rejected as a variant mismatch") {
        cfg.variant = RunVariant::standard_efr;
        cfg.chi0 = 0.0;
        REQUIRE_THROWS_AS(run_baseline(cfg), InvalidSpec);
    }
    SECTION("no_efr matches a plain evolve loop") {
        cfg.variant = RunVariant::no_efr;
        const RunResult run = run_baseline(cfg);
        const Grid g(cfg.geometry, cfg.nx, cfg.ny);
        State s = make_initial_state(g, cfg.flow);
        for (long n = 0; n < cfg.total_steps(); ++n) s = evolve_step(s, cfg.flow, g);
        REQUIRE(run.snaps.back().velocity.u_data() == s.velocity.u_data());
        for (const EfrParams& p : run.traj.applied) REQUIRE(p.chi == 0.0);
    }
    SECTION("standard_ef applies chi = 1 throughout") {
        cfg.variant = RunVariant::standard_ef;
        const RunResult run = run_baseline(cfg);
        REQUIRE(run.traj.applied.size() == static_cast<std::size_t>(cfg.total_steps()));
        for (const EfrParams& p : run.traj.applied) REQUIRE(p.chi == 1.0);
    }
    SECTION("diagnostics cover every step") {
        cfg.variant = RunVariant::standard_efr;
        const RunResult run = run_baseline(cfg);
        REQUIRE(run.diag.size() == static_cast<std::size_t>(cfg.total_steps()) + 1);
        REQUIRE(run.snaps.size() == static_cast<std::size_t>(cfg.total_steps()) + 1);
    }
}

TEST_CASE("run_opt_efr mechanics") {
    RunConfig cfg = tiny_tgv(16, 2);
    const ReferenceSeries ref = run_dns(cfg);

    SECTION("cadence beyond the horizon optimizes exactly once, at step zero") {
        cfg.variant = RunVariant::delta_chi_opt;
        cfg.cadence = 1000;
        cfg.loss.w_gradu = 1.0;
        const RunResult run = run_opt_efr(cfg, ref);
        REQUIRE(run.traj.events.size() == 1);
        REQUIRE(run.traj.events[0].step == 0);
        for (std::size_t n = 1; n < run.traj.applied.size(); ++n) {
            REQUIRE(run.traj.applied[n].delta == run.traj.applied[0].delta);
            REQUIRE(run.traj.applied[n].chi == run.traj.applied[0].chi);
        }
    }
    SECTION("parameters stay piecewise-constant and inside bounds; improvement is monotone") {
        cfg.variant = RunVariant::delta_chi_opt;
        cfg.cadence = 5;
        cfg.loss.w_gradu = 1.0;
        const RunResult run = run_opt_efr(cfg, ref);
        REQUIRE(run.traj.events.size() == 4);  // steps 0,5,10,15 over 20 steps
        for (const OptEvent& e : run.traj.events) {
            REQUIRE_FALSE(e.aborted);
            REQUIRE(e.result.value <= e.warm_start_value + 1e-15);
        }
        for (std::size_t n = 0; n < run.traj.applied.size(); ++n) {
            const EfrParams& p = run.traj.applied[n];
            REQUIRE(p.delta >= cfg.bounds.box[0][0]);
            REQUIRE(p.delta <= cfg.bounds.box[0][1]);
            REQUIRE(p.chi >= 0.0);
            REQUIRE(p.chi <= 1.0);
            if (n % 5 != 0) {
                REQUIRE(p.delta == run.traj.applied[n - 1].delta);
                REQUIRE(p.chi == run.traj.applied[n - 1].chi);
            }
        }
    }
    SECTION("delta_opt_ef holds chi = 1") {
        cfg.variant = RunVariant::delta_opt_ef;
        cfg.chi0 = 1.0;
        cfg.cadence = 5;
        cfg.loss.w_gradu = 1.0;
        const RunResult run = run_opt_efr(cfg, ref);
        for (const EfrParams& p : run.traj.applied) REQUIRE(p.chi == 1.0);
    }
    SECTION("runs are bit-reproducible") {
        cfg.variant = RunVariant::chi_opt;
        cfg.cadence = 5;
        const RunResult a = run_opt_efr(cfg, ref);
        const RunResult b = run_opt_efr(cfg, ref);
        REQUIRE(a.snaps.back().velocity.u_data() == b.snaps.back().velocity.u_data());
        REQUIRE(a.traj.applied.size() == b.traj.applied.size());
        for (std::size_t n = 0; n < a.traj.applied.size(); ++n) {
            REQUIRE(a.traj.applied[n].delta == b.traj.applied[n].delta);
            REQUIRE(a.traj.applied[n].chi == b.traj.applied[n].chi);
        }
    }
    SECTION("reference shorter than the run is rejected") {
        cfg.variant = RunVariant::chi_opt;
        cfg.flow.t_end = 1.0;  // needs more snapshots than ref has
        REQUIRE_THROWS_AS(run_opt_efr(cfg, ref), IncompatibleGrids);
    }
}

TEST_CASE("chi_opt against its own coarse noEFR run drives chi toward zero") {
    RunConfig cfg = tiny_tgv(16, 1);  // fine == coarse: reference is the noEFR run itself
    const ReferenceSeries ref = run_dns(cfg);

    cfg.variant = RunVariant::chi_opt;
    cfg.cadence = 5;
    cfg.chi0 = 0.4;
    const RunResult run = run_opt_efr(cfg, ref);
    for (const OptEvent& e : run.traj.events) {
        REQUIRE_FALSE(e.aborted);
        REQUIRE(e.result.x[0] <= 1e-3);
    }
}

TEST_CASE("recorded chi optima agree with a dense lattice oracle") {
    RunConfig cfg = tiny_tgv(16, 2);
    const ReferenceSeries ref = run_dns(cfg);

    cfg.variant = RunVariant::chi_opt;
    cfg.cadence = 7;
    const RunResult run = run_opt_efr(cfg, ref);
    REQUIRE_FALSE(run.traj.events.empty());

    // replay the trajectory; rebuild each instant's objective and compare
    // the recorded optimum against a 1001-point oracle
    const Grid g(cfg.geometry, cfg.nx, cfg.ny);
    State s = make_initial_state(g, cfg.flow);
    std::size_t ev = 0;
    for (long n = 0; n < cfg.total_steps(); ++n) {
        const State evolved = evolve_step(s, cfg.flow, g);
        if (ev < run.traj.events.size() && run.traj.events[ev].step == n) {
            LossContext ctx;
            ctx.grid = &g;
            ctx.flow = &cfg.flow;
            ctx.filter_cfg = &cfg.filter;
            ctx.evolved = evolved;
            ctx.ref_now = &ref.at(n + 1);
            const Objective obj = make_objective(OptVariant::chi, ctx, cfg.loss, cfg.delta0);
            auto f = [&obj](std::span<const double> x) { return obj(x); };
            const OptResult oracle = grid_search_oracle(f, Bounds::interval(0.0, 1.0), 1001);
            REQUIRE(std::abs(run.traj.events[ev].result.x[0] - oracle.x[0]) <= 1e-3);
            ++ev;
        }
        const EfrParams& p = run.traj.applied[n];
        State next = evolved;
        if (p.chi > 0.0) {
            const VectorField wbar =
                differential_filter(evolved.velocity, p.delta, cfg.filter, g, cfg.flow,
                                    evolved.time);
            next.velocity = relax(evolved.velocity, wbar, p.chi);
        }
        s = next;
    }
    REQUIRE(ev == run.traj.events.size());
}
