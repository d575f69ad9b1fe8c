// Acceptance suite: runs every contract criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exit code is the number of
// failed criteria. Criterion 9 drives the efrlab binary end to end; pass its
// path with --efrlab (defaults to ../tools/efrlab next to this binary).

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "efr/config.hpp"
#include "efr/filter.hpp"
#include "efr/metrics.hpp"
#include "efr/optimize.hpp"
#include "efr/orchestrate.hpp"
#include "efr/rundir.hpp"
#include "efr/snapshot.hpp"

using namespace efr;

namespace {

std::string g_efrlab;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double discrete_k_sq(double k, double dx) {
    const double s = std::sin(0.5 * k * dx);
    return 4.0 * s * s / (dx * dx);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

// --- criterion 1: filter transfer function --------------------------------

Outcome criterion_transfer() {
    const Grid g(GeometrySpec::box(1.0, 1.0), 64, 64);
    FlowConfig cfg;
    FilterConfig fc;
    double worst = 0.0;
    for (const double kmul : {1.0, 2.0, 4.0}) {
        const double k = kmul * 2.0 * M_PI;
        VectorField w(g);
        for (int j = 0; j < g.uny(); ++j)
            for (int i = 0; i < g.unx(); ++i) w.u(i, j) = std::sin(k * g.u_x(i));
        for (const double delta : {1e-4, 5.62e-4, 1e-3}) {
            const VectorField wbar = differential_filter(w, delta, fc, g, cfg, 0.0);
            double num = 0.0, den = 0.0;
            for (std::size_t m = 0; m < w.u_data().size(); ++m) {
                num += wbar.u_data()[m] * w.u_data()[m];
                den += w.u_data()[m] * w.u_data()[m];
            }
            const double expected = 1.0 / (1.0 + 2.0 * delta * delta * discrete_k_sq(k, g.dx()));
            worst = std::max(worst, std::abs(num / den - expected));
        }
    }
    return {worst <= 1e-8, "max gain deviation " + fmt(worst) + " (tol 1e-8)"};
}

// --- criterion 2: relax identities -----------------------------------------

Outcome criterion_relax() {
    const Grid g(GeometrySpec::box(2.0 * M_PI, 2.0 * M_PI), 32, 32);
    FlowConfig cfg;
    cfg.nu = 0.05;
    cfg.dt = 1e-2;
    cfg.initial = InitialCondition::taylor_green;
    const FilterConfig fc;
    const State s0 = make_initial_state(g, cfg);
    const State evolved = evolve_step(s0, cfg, g);

    const State chi0 = efr_step(s0, EfrParams{3e-2, 0.0}, cfg, fc, g);
    if (chi0.velocity.u_data() != evolved.velocity.u_data() ||
        chi0.velocity.v_data() != evolved.velocity.v_data())
        return {false, "chi=0 output differs from the evolve output"};

    const VectorField wbar = differential_filter(evolved.velocity, 3e-2, fc, g, cfg, evolved.time);
    const State chi1 = efr_step(s0, EfrParams{3e-2, 1.0}, cfg, fc, g);
    if (chi1.velocity.u_data() != wbar.u_data() || chi1.velocity.v_data() != wbar.v_data())
        return {false, "chi=1 output differs from the filtered field"};

    bool rejected = false;
    try {
        relax(evolved.velocity, wbar, 1.5);
    } catch (const std::domain_error&) {
        rejected = true;
    }
    if (!rejected) return {false, "chi outside [0,1] was not rejected"};
    return {true, "chi=0 bit-equal, chi=1 bit-equal, out-of-range rejected"};
}

// --- criterion 3: evolve verification --------------------------------------

Outcome criterion_evolve() {
    const Grid g(GeometrySpec::box(2.0 * M_PI, 2.0 * M_PI), 128, 128);
    const double nu = 0.5, T = 0.08;
    auto energy_error = [&](double dt) {
        FlowConfig cfg;
        cfg.nu = nu;
        cfg.dt = dt;
        cfg.t_end = 1.0;
        cfg.initial = InitialCondition::taylor_green;
        State s = make_initial_state(g, cfg);
        const double e0 = 0.5 * l2_norm_sq(s.velocity);
        const int steps = static_cast<int>(std::round(T / dt));
        for (int n = 0; n < steps; ++n) s = evolve_step(s, cfg, g);
        return 0.5 * l2_norm_sq(s.velocity) / e0 - std::exp(-4.0 * nu * T);
    };
    const double e1 = energy_error(4e-3), e2 = energy_error(2e-3), e3 = energy_error(1e-3);
    const double t_order = std::log2(std::abs((e1 - e2) / (e2 - e3)));
    const bool decay_ok = std::abs(e3) < 5e-3;

    // steady manufactured solution, spatial refinement ladder
    auto mms_error = [](int n) {
        const Grid gg(GeometrySpec::box(2.0 * M_PI, 2.0 * M_PI), n, n);
        FlowConfig cfg;
        cfg.nu = 0.05;
        cfg.dt = 5e-3;
        cfg.t_end = 1.0;
        cfg.forcing = [nu = cfg.nu](double x, double y, double) {
            return std::array<double, 2>{
                0.5 * std::sin(2.0 * x) - 2.0 * nu * std::sin(x) * std::cos(y),
                0.5 * std::sin(2.0 * y) + 2.0 * nu * std::cos(x) * std::sin(y)};
        };
        State s(gg);
        for (int j = 0; j < gg.uny(); ++j)
            for (int i = 0; i < gg.unx(); ++i)
                s.velocity.u(i, j) = -std::sin(gg.u_x(i)) * std::cos(gg.u_y(j));
        for (int j = 0; j < gg.vny(); ++j)
            for (int i = 0; i < gg.vnx(); ++i)
                s.velocity.v(i, j) = std::cos(gg.v_x(i)) * std::sin(gg.v_y(j));
        const State exact = s;
        for (int k = 0; k < 20; ++k) s = evolve_step(s, cfg, gg);
        const VectorField diff = lincomb(1.0, s.velocity, -1.0, exact.velocity);
        return std::sqrt(l2_norm_sq(diff) / l2_norm_sq(exact.velocity));
    };
    const double m32 = mms_error(32), m64 = mms_error(64), m128 = mms_error(128);
    const double s_order1 = std::log2(m32 / m64), s_order2 = std::log2(m64 / m128);

    const bool ok = decay_ok && t_order > 0.7 && t_order < 1.3 && s_order1 > 1.7 &&
                    s_order1 < 2.3 && s_order2 > 1.7 && s_order2 < 2.3;
    return {ok, "temporal order " + fmt(t_order) + " (1.0 +/- 0.3), spatial orders " +
                    fmt(s_order1) + "/" + fmt(s_order2) + " (2.0 +/- 0.3), decay err " + fmt(e3)};
}

// --- criterion 4: divergence control ----------------------------------------

Outcome criterion_divergence() {
    const Grid g(GeometrySpec::box(2.0 * M_PI, 2.0 * M_PI), 64, 64);
    FlowConfig cfg;
    cfg.nu = 0.01;
    cfg.dt = 4e-3;
    cfg.initial = InitialCondition::taylor_green;
    State s = make_initial_state(g, cfg);
    double worst_div = 0.0;
    for (int n = 0; n < 10; ++n) {
        s = evolve_step(s, cfg, g);
        worst_div = std::max(worst_div, avg_abs_divergence(s.velocity));
    }
    if (worst_div > 1e-8)
        return {false, "periodic post-projection avg |div| " + fmt(worst_div) + " > 1e-8"};

    const Grid ch(GeometrySpec::channel(), 128, 24);
    FlowConfig chf;  // benchmark defaults
    State cs(ch);
    for (int n = 0; n < 50; ++n) cs = evolve_step(cs, chf, ch);
    FilterConfig plain, graddiv;
    graddiv.grad_div_gamma = 100.0;
    const double delta = chf.kolmogorov_eta();
    const double d0 =
        avg_abs_divergence(differential_filter(cs.velocity, delta, plain, ch, chf, cs.time));
    const double d1 =
        avg_abs_divergence(differential_filter(cs.velocity, delta, graddiv, ch, chf, cs.time));
    const bool ok = d1 <= 0.1 * d0;
    return {ok, "projection avg |div| " + fmt(worst_div) + "; filter div gamma=100/gamma=0 = " +
                    fmt(d1) + "/" + fmt(d0) + " (need <= 0.1x)"};
}

// --- criterion 5: optimizer -------------------------------------------------

Outcome criterion_optimizer() {
    // analytic bounded quadratics, including an active bound
    auto f1 = [](std::span<const double> x) { return (x[0] - 0.3) * (x[0] - 0.3); };
    const OptResult r1 = minimize_bounded(f1, Bounds::interval(0.0, 1.0), {0.9});
    if (std::abs(r1.x[0] - 0.3) > 1e-6) return {false, "interior quadratic argmin off"};

    auto f2 = [](std::span<const double> x) { return (x[0] + 1.0) * (x[0] + 1.0); };
    const OptResult r2 = minimize_bounded(f2, Bounds::interval(0.0, 1.0), {0.7});
    if (std::abs(r2.x[0]) > 1e-6) return {false, "active-bound quadratic argmin off"};

    const double eta = 5.62e-4;
    auto f3 = [eta](std::span<const double> x) {
        const double a = (x[0] - 5e-4) / eta, b = x[1] - 0.2;
        return a * a + b * b;
    };
    const OptResult r3 = minimize_bounded(f3, Bounds::rect(1e-5, 1e-3, 0.0, 1.0), {1e-4, 0.9});
    if (std::abs(r3.x[0] - 5e-4) > 1e-6 || std::abs(r3.x[1] - 0.2) > 1e-6)
        return {false, "2d separable quadratic argmin off"};

    // lattice-oracle agreement on random unimodal objectives
    std::mt19937 rng(20240915);
    std::uniform_real_distribution<double> pos(0.2, 3.0), loc(0.0, 1.0);
    const Bounds b = Bounds::interval(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const double al = pos(rng), ar = pos(rng), m = loc(rng);
        auto f = [=](std::span<const double> x) {
            const double d = x[0] - m;
            return d < 0.0 ? al * d * d - 0.1 * d : ar * d * d + 0.05 * d;
        };
        const OptResult opt = minimize_bounded(f, b, {loc(rng)});
        if (!b.contains(opt.x)) return {false, "optimizer left the bounds"};
        const OptResult oracle = grid_search_oracle(f, b, 1001);
        worst = std::max(worst, std::abs(opt.x[0] - oracle.x[0]));
    }
    const bool ok = worst <= 1e-3;
    return {ok, "quadratics within 1e-6; oracle gap " + fmt(worst) + " (tol 1e-3, 20 objectives)"};
}

// --- criterion 6: algorithm mechanics ----------------------------------------

Outcome criterion_mechanics() {
    RunConfig cfg = RunConfig::defaults();
    cfg.nx = 64;
    cfg.ny = 12;
    cfg.fine_nx = 128;
    cfg.fine_ny = 24;
    cfg.flow.t_end = cfg.flow.t0 + 100 * cfg.flow.dt;  // 100 steps
    cfg.variant = RunVariant::delta_chi_opt;
    cfg.loss.w_gradu = 1.0;
    cfg.cadence = 10;

    const ReferenceSeries ref = run_dns(cfg);
    const RunResult run = run_opt_efr(cfg, ref);

    if (run.traj.events.size() != 10)
        return {false, "expected 10 optimization instants, saw " +
                           std::to_string(run.traj.events.size())};
    for (const OptEvent& e : run.traj.events) {
        if (e.aborted) return {false, "optimizer aborted at step " + std::to_string(e.step)};
        if (e.result.value > e.warm_start_value + 1e-15)
            return {false, "objective above the warm start at step " + std::to_string(e.step)};
    }
    for (std::size_t n = 0; n < run.traj.applied.size(); ++n) {
        if (n % 10 == 0) continue;
        if (run.traj.applied[n].delta != run.traj.applied[n - 1].delta ||
            run.traj.applied[n].chi != run.traj.applied[n - 1].chi)
            return {false, "parameters changed between optimization instants"};
    }
    return {true, "10 instants, piecewise-constant parameters, monotone improvement"};
}

// --- criterion 7: directional end-to-end gain --------------------------------

RunConfig shear_layer_config() {
    RunConfig cfg = RunConfig::defaults();
    cfg.geometry = GeometrySpec::box(1.0, 1.0);
    cfg.nx = cfg.ny = 64;
    cfg.fine_nx = cfg.fine_ny = 256;
    cfg.flow.nu = 1e-4;
    cfg.flow.dt = 4e-3;
    cfg.flow.t0 = 0.0;
    cfg.flow.t_end = 1.0;
    cfg.flow.u_ref = 1.0;
    cfg.flow.l_ref = 1.0;  // eta-analogue = Re^{-3/4} = 1e-3
    cfg.flow.initial = InitialCondition::shear_layer;
    cfg.delta0 = cfg.flow.kolmogorov_eta();
    cfg.chi0 = 5.0 * cfg.flow.dt;
    cfg.cadence = 10;
    return cfg;
}

Outcome criterion_gain() {
    RunConfig cfg = shear_layer_config();
    const ReferenceSeries ref = run_dns(cfg);

    RunConfig base = cfg;
    base.variant = RunVariant::standard_efr;
    const RunResult baseline = run_baseline(base);

    RunConfig opt = cfg;
    opt.variant = RunVariant::delta_chi_opt;
    opt.loss.kind = LossKind::global;
    opt.loss.w_u = 1.0;
    opt.loss.w_gradu = 1.0;
    const RunResult optimized = run_opt_efr(opt, ref);

    const double base_err = time_avg_contributions(baseline, ref).avg_gradu;
    const double opt_err = time_avg_contributions(optimized, ref).avg_gradu;
    const double g = gain(opt_err, base_err);
    const bool ok = opt_err < base_err;  // gain > 0 is the contract
    return {ok, "avg L_gradu opt/base = " + fmt(opt_err) + "/" + fmt(base_err) + ", gain " +
                    fmt(g) + "% (expected >= 25%, required > 0%)"};
}

// --- criterion 8: self-reference sanity --------------------------------------

Outcome criterion_self_reference() {
    RunConfig cfg = RunConfig::defaults();
    cfg.geometry = GeometrySpec::box(2.0 * M_PI, 2.0 * M_PI);
    cfg.nx = cfg.ny = 32;
    cfg.fine_nx = cfg.fine_ny = 32;  // reference is the coarse noEFR run itself
    cfg.flow.nu = 0.02;
    cfg.flow.dt = 1e-2;
    cfg.flow.t_end = 0.4;
    cfg.flow.initial = InitialCondition::taylor_green;
    cfg.delta0 = 0.05;
    cfg.chi0 = 0.4;
    cfg.bounds = Bounds::rect(1e-3, 0.5, 0.0, 1.0);
    cfg.cadence = 10;
    cfg.variant = RunVariant::chi_opt;

    const ReferenceSeries ref = run_dns(cfg);
    const RunResult run = run_opt_efr(cfg, ref);
    double worst = 0.0;
    for (const OptEvent& e : run.traj.events) {
        if (e.aborted) return {false, "optimizer aborted at step " + std::to_string(e.step)};
        worst = std::max(worst, e.result.x[0]);
    }
    const bool ok = worst <= 1e-3 && !run.traj.events.empty();
    return {ok, "max optimized chi " + fmt(worst) + " over " +
                    std::to_string(run.traj.events.size()) + " instants (tol 1e-3)"};
}

// --- criterion 9: pipeline reproducibility ------------------------------------

int run_cmd(const std::string& cmd) { return std::system(cmd.c_str()); }

std::string cat(const std::string& path) { return read_file_bytes(path); }

Outcome criterion_pipeline() {
    if (g_efrlab.empty() || !std::filesystem::exists(g_efrlab))
        return {false, "efrlab binary not found (pass --efrlab <path>)"};

    const std::filesystem::path tmp =
        std::filesystem::temp_directory_path() / "efrlab_acceptance";
    std::filesystem::remove_all(tmp);
    std::filesystem::create_directories(tmp);

    const std::string cfg_path = (tmp / "run.cfg").string();
    std::ofstream(cfg_path) << "[geometry]\n"
                               "kind = channel_cylinder\n"
                               "nx = 64\nny = 12\n"
                               "[flow]\n"
                               "t_end = 0.2\n"
                               "[reference]\n"
                               "fine_nx = 128\nfine_ny = 24\n"
                               "[run]\n"
                               "variant = chi_opt\n"
                               "loss = global\n"
                               "w_u = 1\nw_gradu = 1\n"
                               "cadence = 10\n";
    const std::string base_cfg = (tmp / "base.cfg").string();
    std::ofstream(base_cfg) << "[geometry]\n"
                               "kind = channel_cylinder\n"
                               "nx = 64\nny = 12\n"
                               "[flow]\n"
                               "t_end = 0.2\n"
                               "[reference]\n"
                               "fine_nx = 128\nfine_ny = 24\n"
                               "[run]\n"
                               "variant = standard_efr\n";

    auto pipeline = [&](const std::string& tag) -> bool {
        const std::string d = (tmp / tag).string();
        std::filesystem::create_directories(d);
        if (run_cmd(g_efrlab + " dns " + cfg_path + " --out " + d + "/ref > /dev/null")) return false;
        if (run_cmd(g_efrlab + " run " + cfg_path + " --ref " + d + "/ref --out " + d +
                    "/opt > /dev/null"))
            return false;
        if (run_cmd(g_efrlab + " run " + base_cfg + " --out " + d + "/base > /dev/null"))
            return false;
        if (run_cmd(g_efrlab + " metrics --run " + d + "/opt --ref " + d + "/ref --out " + d +
                    "/metrics.csv > /dev/null"))
            return false;
        if (run_cmd(g_efrlab + " pareto --runs " + d + "/opt " + d + "/base --ref " + d +
                    "/ref --out " + d + "/pareto.csv > /dev/null"))
            return false;
        if (run_cmd(g_efrlab + " export-vtk --run " + d + "/opt --step 0 --out " + d +
                    "/snap0.vtk > /dev/null"))
            return false;
        return true;
    };

    if (!pipeline("a")) return {false, "pipeline a failed"};
    if (!pipeline("b")) return {false, "pipeline b failed"};

    // rerunning the whole pipeline reproduces every snapshot and csv byte
    // for byte (wall-clock lives only in manifests)
    const long n_steps = 50;
    for (long s = 0; s <= n_steps; ++s) {
        if (cat(snapshot_path((tmp / "a/ref").string(), s)) !=
            cat(snapshot_path((tmp / "b/ref").string(), s)))
            return {false, "reference snapshots differ between reruns"};
        if (cat(snapshot_path((tmp / "a/opt").string(), s)) !=
            cat(snapshot_path((tmp / "b/opt").string(), s)))
            return {false, "run snapshots differ between reruns"};
    }
    if (cat((tmp / "a/metrics.csv").string()) != cat((tmp / "b/metrics.csv").string()))
        return {false, "metrics csv differs between reruns"};
    if (cat((tmp / "a/opt/trajectory.csv").string()) !=
        cat((tmp / "b/opt/trajectory.csv").string()))
        return {false, "trajectory csv differs between reruns"};

    // pareto regenerated over the same inputs is byte-identical
    const std::string d = (tmp / "a").string();
    if (run_cmd(g_efrlab + " pareto --runs " + d + "/opt " + d + "/base --ref " + d +
                "/ref --out " + d + "/pareto2.csv > /dev/null"))
        return {false, "pareto rerun failed"};
    if (cat(d + "/pareto.csv") != cat(d + "/pareto2.csv"))
        return {false, "pareto csv differs when regenerated on the same inputs"};

    const std::string mcsv = cat((tmp / "a/metrics.csv").string());
    const long rows = std::count(mcsv.begin(), mcsv.end(), '\n') - 1;
    if (rows != n_steps + 1)
        return {false, "metrics csv has " + std::to_string(rows) + " rows, expected " +
                           std::to_string(n_steps + 1)};

    return {true, "dns/run/metrics/pareto byte-identical across reruns, " +
                      std::to_string(rows) + " metric rows"};
}

}  // namespace

int main(int argc, char** argv) {
    for (int a = 1; a < argc; ++a) {
        const std::string arg = argv[a];
        if (arg == "--efrlab" && a + 1 < argc) g_efrlab = argv[++a];
    }
    if (g_efrlab.empty()) {
        const std::filesystem::path guess =
            std::filesystem::path(argv[0]).parent_path().parent_path() / "tools" / "efrlab";
        if (std::filesystem::exists(guess)) g_efrlab = guess.string();
    }

    struct Criterion {
        int id;
        const char* label;
        std::function<Outcome()> fn;
    };
    const std::vector<Criterion> criteria = {
        {1, "filter transfer function", criterion_transfer},
        {2, "relax identities", criterion_relax},
        {3, "evolve verification (orders)", criterion_evolve},
        {4, "divergence control", criterion_divergence},
        {5, "optimizer contract", criterion_optimizer},
        {6, "algorithm mechanics", criterion_mechanics},
        {7, "directional end-to-end gain", criterion_gain},
        {8, "self-reference sanity", criterion_self_reference},
        {9, "pipeline reproducibility", criterion_pipeline},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.fn();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] criterion %d: %s — %s (%.1fs)\n", out.pass ? "PASS" : "FAIL", c.id,
                    c.label, out.detail.c_str(), secs);
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    if (failures == 0)
        std::printf("acceptance: all %zu criteria passed\n", criteria.size());
    else
        std::printf("acceptance: %d criteria FAILED\n", failures);
    return failures;
}
