#pragma once

/// Full simulation drivers: fine-grid reference generation, fixed-parameter
/// baselines (noEFR, standard EFR, standard EF), and the three on-the-fly
/// parameter-optimization variants.

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "efr/evolve.hpp"
#include "efr/field.hpp"
#include "efr/filter.hpp"
#include "efr/grid.hpp"
#include "efr/loss.hpp"
#include "efr/ops.hpp"
#include "efr/optimize.hpp"

namespace efr {

enum class RunVariant : std::uint8_t {
    dns,
    no_efr,
    standard_efr,
    standard_ef,
    chi_opt,
    delta_opt_ef,
    delta_chi_opt
};

inline const char* to_string(RunVariant v) {
    switch (v) {
        case RunVariant::dns: return "dns";
        case RunVariant::no_efr: return "no_efr";
        case RunVariant::standard_efr: return "standard_efr";
        case RunVariant::standard_ef: return "standard_ef";
        case RunVariant::chi_opt: return "chi_opt";
        case RunVariant::delta_opt_ef: return "delta_opt_ef";
        case RunVariant::delta_chi_opt: return "delta_chi_opt";
    }
    return "?";
}

inline bool is_opt_variant(RunVariant v) {
    return v == RunVariant::chi_opt || v == RunVariant::delta_opt_ef ||
           v == RunVariant::delta_chi_opt;
}

struct RunConfig {
    GeometrySpec geometry;
    int nx = 64, ny = 12;          // coarse (regularized) grid
    int fine_nx = 0, fine_ny = 0;  // reference grid (dns)

    FlowConfig flow;
    FilterConfig filter;

    RunVariant variant = RunVariant::standard_efr;
    LossSpec loss;

    long cadence = 10;  // optimize every cadence-th step
    double delta0 = 0.0, chi0 = 0.0;
    Bounds bounds = Bounds::rect(1e-5, 1e-3, 0.0, 1.0);  // [delta, chi]
    long snapshot_stride = 1;

    std::string out_dir, ref_dir;

    /// Benchmark defaults: channel at Re=1000, delta0 = eta, chi0 = 5 dt.
    static RunConfig defaults() {
        RunConfig c;
        c.geometry = GeometrySpec::channel();
        c.delta0 = c.flow.kolmogorov_eta();
        c.chi0 = 5.0 * c.flow.dt;
        return c;
    }

    long total_steps() const { return std::lround((flow.t_end - flow.t0) / flow.dt); }

    void validate() const {
        geometry.validate();
        flow.validate();
        filter.validate();
        loss.validate();
        bounds.validate();
        if (bounds.dim() != 2) throw InvalidSpec("run: bounds must cover (delta, chi)");
        if (nx < 4 || ny < 4) throw InvalidSpec("run: coarse grid too small");
        if (cadence < 1) throw InvalidSpec("run: cadence must be at least 1");
        if (snapshot_stride < 1) throw InvalidSpec("run: snapshot stride must be at least 1");
        if (delta0 < 0.0) throw InvalidSpec("run: delta0 must be nonnegative");
        if (chi0 < 0.0 || chi0 > 1.0) throw InvalidSpec("run: chi0 must lie in [0,1]");
        if (variant == RunVariant::dns && (fine_nx < 4 || fine_ny < 4))
            throw InvalidSpec("run: dns needs a fine grid spec");
        if (variant == RunVariant::standard_efr && chi0 == 0.0)
            throw InvalidSpec("run: standard_efr with chi = 0 is the no_efr variant");
        if (variant == RunVariant::delta_opt_ef && chi0 != 1.0)
            throw InvalidSpec("run: delta_opt_ef fixes chi = 1");
    }
};

/// Reference snapshots restricted to the coarse grid at every coarse step.
struct ReferenceSeries {
    std::vector<State> snaps;  // index n = 0..N_T
    int fine_nx = 0, fine_ny = 0;
    double dt = 0.0;
    double wall_seconds = 0.0;

    long last_index() const { return static_cast<long>(snaps.size()) - 1; }
    const State& at(long n) const {
        if (n < 0 || n > last_index())
            throw InvalidSpec("reference series: snapshot index out of range");
        return snaps[static_cast<std::size_t>(n)];
    }
};

struct OptEvent {
    long step = 0;
    OptResult result;
    double warm_start_value = 0.0;
    bool aborted = false;
    std::string note;
};

struct ParamTrajectory {
    std::vector<EfrParams> applied;  // parameters applied at step n+1, n = 0..N_T-1
    std::vector<OptEvent> events;
};

struct StepDiagnostics {
    long step = 0;
    double time = 0.0;
    double vel_l2_sq = 0.0, pr_l2_sq = 0.0, vel_h1_sq = 0.0, avg_div = 0.0;
};

struct RunResult {
    std::vector<long> snap_steps;
    std::vector<State> snaps;
    ParamTrajectory traj;
    std::vector<StepDiagnostics> diag;
    double wall_seconds = 0.0;
};

namespace detail {

inline constexpr double kBlowUpThreshold = 1e6;

inline void check_blow_up(const State& s) {
    if (!all_finite(s) || max_abs(s.velocity) > kBlowUpThreshold ||
        max_abs(s.pressure) > kBlowUpThreshold)
        throw BlowUp("simulation blew up at t=" + std::to_string(s.time), s.time);
}

inline StepDiagnostics diagnostics_of(long step, const State& s) {
    StepDiagnostics d;
    d.step = step;
    d.time = s.time;
    d.vel_l2_sq = l2_norm_sq(s.velocity);
    d.pr_l2_sq = l2_norm_sq(s.pressure);
    d.vel_h1_sq = h1_seminorm_sq(s.velocity);
    d.avg_div = avg_abs_divergence(s.velocity);
    return d;
}

class WallClock {
public:
    WallClock() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// Reference run: advance noEFR on the fine grid, restrict and store every
/// coarse-step snapshot.
inline ReferenceSeries run_dns(const RunConfig& cfg) {
    RunConfig checked = cfg;
    checked.variant = RunVariant::dns;
    checked.validate();

    const detail::WallClock clock;
    const Grid fine(cfg.geometry, cfg.fine_nx, cfg.fine_ny);
    const Grid coarse(cfg.geometry, cfg.nx, cfg.ny);

    ReferenceSeries ref;
    ref.fine_nx = cfg.fine_nx;
    ref.fine_ny = cfg.fine_ny;
    ref.dt = cfg.flow.dt;

    State s = make_initial_state(fine, cfg.flow);
    ref.snaps.push_back(restrict_state(s, fine, coarse));
    const long n_steps = cfg.total_steps();
    for (long n = 0; n < n_steps; ++n) {
        s = evolve_step(s, cfg.flow, fine);
        detail::check_blow_up(s);
        ref.snaps.push_back(restrict_state(s, fine, coarse));
    }
    ref.wall_seconds = clock.seconds();
    return ref;
}

namespace detail {

inline void record_step(RunResult& out, const RunConfig& cfg, long step, const State& s) {
    out.diag.push_back(diagnostics_of(step, s));
    if (step % cfg.snapshot_stride == 0 || step == cfg.total_steps()) {
        out.snap_steps.push_back(step);
        out.snaps.push_back(s);
    }
}

inline State apply_filter_relax(const State& evolved, const EfrParams& p, const RunConfig& cfg,
                                const Grid& g) {
    if (p.chi == 0.0) return evolved;
    State out = evolved;
    const VectorField wbar =
        differential_filter(evolved.velocity, p.delta, cfg.filter, g, cfg.flow, evolved.time);
    out.velocity = relax(evolved.velocity, wbar, p.chi);
    return out;
}

}  // namespace detail

/// Fixed-parameter run: noEFR, standard EFR, or standard EF.
inline RunResult run_baseline(const RunConfig& cfg) {
    cfg.validate();
    if (is_opt_variant(cfg.variant) || cfg.variant == RunVariant::dns)
        throw InvalidSpec("run_baseline: variant must be no_efr, standard_efr, or standard_ef");

    EfrParams params{cfg.delta0, cfg.chi0};
    if (cfg.variant == RunVariant::no_efr) params.chi = 0.0;
    if (cfg.variant == RunVariant::standard_ef) params.chi = 1.0;
    params.validate();

    const detail::WallClock clock;
    const Grid g(cfg.geometry, cfg.nx, cfg.ny);
    RunResult out;
    State s = make_initial_state(g, cfg.flow);
    detail::record_step(out, cfg, 0, s);

    const long n_steps = cfg.total_steps();
    for (long n = 0; n < n_steps; ++n) {
        s = efr_step(s, params, cfg.flow, cfg.filter, g);
        detail::check_blow_up(s);
        out.traj.applied.push_back(params);
        detail::record_step(out, cfg, n + 1, s);
    }
    out.wall_seconds = clock.seconds();
    return out;
}

/// Opt-EFR run: evolve every step; at scheduled instants rebuild the
/// objective around the evolved state and minimize it warm-started from the
/// previous optimum; apply filter+relax with the current parameters.
inline RunResult run_opt_efr(const RunConfig& cfg, const ReferenceSeries& ref) {
    cfg.validate();
    if (!is_opt_variant(cfg.variant))
        throw InvalidSpec("run_opt_efr: variant must be chi_opt, delta_opt_ef, or delta_chi_opt");
    const long n_steps = cfg.total_steps();
    if (ref.last_index() < n_steps)
        throw IncompatibleGrids("run_opt_efr: reference series shorter than the run");
    if (std::abs(ref.dt - cfg.flow.dt) > 1e-14)
        throw IncompatibleGrids("run_opt_efr: reference time step mismatch");

    const OptVariant ov = cfg.variant == RunVariant::chi_opt ? OptVariant::chi
                          : cfg.variant == RunVariant::delta_opt_ef
                              ? OptVariant::delta
                              : OptVariant::delta_chi;

    const detail::WallClock clock;
    const Grid g(cfg.geometry, cfg.nx, cfg.ny);
    RunResult out;
    State s = make_initial_state(g, cfg.flow);
    detail::record_step(out, cfg, 0, s);

    EfrParams mu{cfg.delta0, cfg.chi0};
    if (cfg.variant == RunVariant::delta_opt_ef) mu.chi = 1.0;

    for (long n = 0; n < n_steps; ++n) {
        State evolved = evolve_step(s, cfg.flow, g);

        if (optimization_schedule(n, cfg.cadence)) {
            LossContext ctx;
            ctx.grid = &g;
            ctx.flow = &cfg.flow;
            ctx.filter_cfg = &cfg.filter;
            ctx.evolved = evolved;
            ctx.ref_now = &ref.at(n + 1);
            LossSpec spec = cfg.loss;
            if (spec.w_p > 0.0 && n + 2 <= ref.last_index())
                ctx.ref_next = &ref.at(n + 2);
            else
                spec.w_p = 0.0;  // pressure term needs the t^{n+2} snapshot

            OptEvent ev;
            ev.step = n;
            try {
                const Objective obj = make_objective(ov, ctx, spec, cfg.delta0);
                auto f = [&obj](std::span<const double> x) { return obj(x); };

                Bounds b;
                std::vector<double> x0;
                switch (ov) {
                    case OptVariant::chi:
                        b = Bounds({cfg.bounds.box[1]});
                        x0 = {mu.chi};
                        break;
                    case OptVariant::delta:
                        b = Bounds({cfg.bounds.box[0]});
                        x0 = {mu.delta};
                        break;
                    case OptVariant::delta_chi:
                        b = cfg.bounds;
                        x0 = {mu.delta, mu.chi};
                        break;
                }
                const std::vector<double> x0c = b.clamp(x0);
                ev.warm_start_value = f(x0c);
                ev.result = minimize_bounded(f, b, x0);
                if (std::isfinite(ev.result.value)) {
                    const EfrParams next = obj.params_from(ev.result.x);
                    mu = next;
                } else {
                    ev.aborted = true;
                    ev.note = "non-finite objective, parameters retained";
                }
            } catch (const std::exception& e) {
                ev.aborted = true;
                ev.note = e.what();
            }
            out.traj.events.push_back(std::move(ev));
        }

        s = detail::apply_filter_relax(evolved, mu, cfg, g);
        detail::check_blow_up(s);
        out.traj.applied.push_back(mu);
        detail::record_step(out, cfg, n + 1, s);
    }
    out.wall_seconds = clock.seconds();
    return out;
}

}  // namespace efr
