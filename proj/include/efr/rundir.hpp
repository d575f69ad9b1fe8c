#pragma once

/// Run-directory layout shared by the CLI subcommands: manifest.json plus
/// numbered snapshot files, and CSV records of trajectories, diagnostics,
/// error series, and Pareto tables.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "efr/config.hpp"
#include "efr/metrics.hpp"
#include "efr/orchestrate.hpp"
#include "efr/snapshot.hpp"
#include "efr/version.hpp"

namespace efr {

namespace detail {

/// Shortest round-trip decimal form; keeps CSV output byte-reproducible.
inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline std::string snapshot_path(const std::string& dir, long step) {
    char name[32];
    std::snprintf(name, sizeof(name), "snap_%06ld.efrs", step);
    return dir + "/" + name;
}

inline nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["geometry"] = {{"kind", c.geometry.kind == GeometryKind::periodic_box ? "periodic_box"
                                                                            : "channel_cylinder"},
                     {"length", c.geometry.length},
                     {"height", c.geometry.height},
                     {"cyl_x", c.geometry.cyl_x},
                     {"cyl_y", c.geometry.cyl_y},
                     {"cyl_r", c.geometry.cyl_r},
                     {"box_lx", c.geometry.box_lx},
                     {"box_ly", c.geometry.box_ly},
                     {"nx", c.nx},
                     {"ny", c.ny}};
    j["flow"] = {{"nu", c.flow.nu},
                 {"dt", c.flow.dt},
                 {"t0", c.flow.t0},
                 {"t_end", c.flow.t_end},
                 {"inlet_peak", c.flow.inlet_peak},
                 {"u_ref", c.flow.u_ref},
                 {"l_ref", c.flow.l_ref},
                 {"upwind_blend", c.flow.upwind_blend},
                 {"solver_tol", c.flow.solver_tol},
                 {"initial", c.flow.initial == InitialCondition::zero ? "zero"
                             : c.flow.initial == InitialCondition::taylor_green
                                 ? "taylor_green"
                                 : "shear_layer"}};
    j["reference"] = {{"fine_nx", c.fine_nx}, {"fine_ny", c.fine_ny}};
    j["efr"] = {{"delta0", c.delta0},
                {"chi0", c.chi0},
                {"gamma", c.filter.grad_div_gamma},
                {"filter_tol", c.filter.solver_tol}};
    j["run"] = {{"variant", to_string(c.variant)},
                {"loss", c.loss.kind == LossKind::local ? "local" : "global"},
                {"w_u", c.loss.w_u},
                {"w_gradu", c.loss.w_gradu},
                {"w_p", c.loss.w_p},
                {"cadence", c.cadence},
                {"delta_lo", c.bounds.box[0][0]},
                {"delta_hi", c.bounds.box[0][1]},
                {"chi_lo", c.bounds.box[1][0]},
                {"chi_hi", c.bounds.box[1][1]},
                {"snapshot_stride", c.snapshot_stride}};
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c = RunConfig::defaults();
    const auto& g = j.at("geometry");
    if (g.at("kind").get<std::string>() == "periodic_box") {
        c.geometry = GeometrySpec::box(g.at("box_lx").get<double>(), g.at("box_ly").get<double>());
    } else {
        c.geometry = GeometrySpec::channel();
        c.geometry.length = g.at("length").get<double>();
        c.geometry.height = g.at("height").get<double>();
        c.geometry.cyl_x = g.at("cyl_x").get<double>();
        c.geometry.cyl_y = g.at("cyl_y").get<double>();
        c.geometry.cyl_r = g.at("cyl_r").get<double>();
    }
    c.nx = g.at("nx").get<int>();
    c.ny = g.at("ny").get<int>();
    const auto& f = j.at("flow");
    c.flow.nu = f.at("nu").get<double>();
    c.flow.dt = f.at("dt").get<double>();
    c.flow.t0 = f.at("t0").get<double>();
    c.flow.t_end = f.at("t_end").get<double>();
    c.flow.inlet_peak = f.at("inlet_peak").get<double>();
    c.flow.u_ref = f.at("u_ref").get<double>();
    c.flow.l_ref = f.at("l_ref").get<double>();
    c.flow.upwind_blend = f.at("upwind_blend").get<double>();
    c.flow.solver_tol = f.at("solver_tol").get<double>();
    const std::string init = f.at("initial").get<std::string>();
    c.flow.initial = init == "zero" ? InitialCondition::zero
                     : init == "taylor_green" ? InitialCondition::taylor_green
                                              : InitialCondition::shear_layer;
    c.fine_nx = j.at("reference").at("fine_nx").get<int>();
    c.fine_ny = j.at("reference").at("fine_ny").get<int>();
    const auto& e = j.at("efr");
    c.delta0 = e.at("delta0").get<double>();
    c.chi0 = e.at("chi0").get<double>();
    c.filter.grad_div_gamma = e.at("gamma").get<double>();
    c.filter.solver_tol = e.at("filter_tol").get<double>();
    const auto& r = j.at("run");
    c.variant = detail::parse_variant(r.at("variant").get<std::string>(), "manifest");
    c.loss.kind = r.at("loss").get<std::string>() == "local" ? LossKind::local : LossKind::global;
    c.loss.w_u = r.at("w_u").get<double>();
    c.loss.w_gradu = r.at("w_gradu").get<double>();
    c.loss.w_p = r.at("w_p").get<double>();
    c.cadence = r.at("cadence").get<long>();
    c.bounds = Bounds::rect(r.at("delta_lo").get<double>(), r.at("delta_hi").get<double>(),
                            r.at("chi_lo").get<double>(), r.at("chi_hi").get<double>());
    c.snapshot_stride = r.at("snapshot_stride").get<long>();
    return c;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << content;
    if (!out) throw IoError("short write to " + path);
}

inline void write_manifest(const std::string& dir, const nlohmann::json& j) {
    write_text_file(dir + "/manifest.json", j.dump(2) + "\n");
}

inline nlohmann::json read_manifest(const std::string& dir) {
    std::ifstream in(dir + "/manifest.json");
    if (!in) throw IoError("cannot open " + dir + "/manifest.json");
    nlohmann::json j;
    in >> j;
    return j;
}

/// Hash over the snapshot files of a directory, in step order.
inline std::uint64_t hash_snapshot_dir(const std::string& dir, const std::vector<long>& steps) {
    std::uint64_t h = 1469598103934665603ull;
    for (const long s : steps) h = fnv1a64(read_file_bytes(snapshot_path(dir, s)), h);
    return h;
}

inline std::string trajectory_csv(const ParamTrajectory& traj, double dt, double t0) {
    std::string out = "step,time,delta,chi\n";
    for (std::size_t n = 0; n < traj.applied.size(); ++n) {
        out += std::to_string(n + 1) + "," + detail::fmt_double(t0 + (n + 1) * dt) + "," +
               detail::fmt_double(traj.applied[n].delta) + "," +
               detail::fmt_double(traj.applied[n].chi) + "\n";
    }
    return out;
}

inline std::string events_csv(const ParamTrajectory& traj) {
    std::string out = "step,warm_start_value,value,iterations,evaluations,converged,aborted\n";
    for (const OptEvent& e : traj.events) {
        out += std::to_string(e.step) + "," + detail::fmt_double(e.warm_start_value) + "," +
               detail::fmt_double(e.result.value) + "," + std::to_string(e.result.iterations) +
               "," + std::to_string(e.result.evaluations) + "," +
               (e.result.converged ? "1" : "0") + "," + (e.aborted ? "1" : "0") + "\n";
    }
    return out;
}

inline std::string diagnostics_csv(const std::vector<StepDiagnostics>& diag) {
    std::string out = "step,time,vel_l2_sq,pr_l2_sq,vel_h1_sq,avg_abs_div\n";
    for (const StepDiagnostics& d : diag) {
        out += std::to_string(d.step) + "," + detail::fmt_double(d.time) + "," +
               detail::fmt_double(d.vel_l2_sq) + "," + detail::fmt_double(d.pr_l2_sq) + "," +
               detail::fmt_double(d.vel_h1_sq) + "," + detail::fmt_double(d.avg_div) + "\n";
    }
    return out;
}

/// Persist a reference series: manifest + one snapshot per coarse step.
inline void write_reference_dir(const std::string& dir, const RunConfig& cfg,
                                const ReferenceSeries& ref) {
    std::filesystem::create_directories(dir);
    const Grid coarse(cfg.geometry, cfg.nx, cfg.ny);

    nlohmann::json m;
    m["tool"] = "efrlab";
    m["version"] = kVersion;
    m["kind"] = "reference";
    m["status"] = "running";
    m["config"] = config_to_json(cfg);
    write_manifest(dir, m);

    std::vector<long> steps;
    for (std::size_t n = 0; n < ref.snaps.size(); ++n) {
        save_snapshot(snapshot_path(dir, static_cast<long>(n)), ref.snaps[n], coarse);
        steps.push_back(static_cast<long>(n));
    }

    m["status"] = "complete";
    m["wall_seconds"] = ref.wall_seconds;
    m["snapshot_count"] = ref.snaps.size();
    m["content_hash"] = hash_snapshot_dir(dir, steps);
    write_manifest(dir, m);
}

struct LoadedReference {
    RunConfig cfg;
    ReferenceSeries ref;
};

inline LoadedReference read_reference_dir(const std::string& dir) {
    const nlohmann::json m = read_manifest(dir);
    LoadedReference out;
    out.cfg = config_from_json(m.at("config"));
    const Grid coarse(out.cfg.geometry, out.cfg.nx, out.cfg.ny);
    const long count = m.at("snapshot_count").get<long>();
    out.ref.fine_nx = out.cfg.fine_nx;
    out.ref.fine_ny = out.cfg.fine_ny;
    out.ref.dt = out.cfg.flow.dt;
    if (m.contains("wall_seconds")) out.ref.wall_seconds = m.at("wall_seconds").get<double>();
    for (long n = 0; n < count; ++n)
        out.ref.snaps.push_back(load_snapshot(snapshot_path(dir, n), coarse));
    return out;
}

/// Persist a run: manifest + snapshots + trajectory/diagnostics CSVs.
inline void write_run_dir(const std::string& dir, const RunConfig& cfg, const RunResult& run,
                          std::uint64_t ref_hash) {
    std::filesystem::create_directories(dir);
    const Grid g(cfg.geometry, cfg.nx, cfg.ny);

    nlohmann::json m;
    m["tool"] = "efrlab";
    m["version"] = kVersion;
    m["kind"] = "run";
    m["status"] = "running";
    m["config"] = config_to_json(cfg);
    if (ref_hash) m["reference_hash"] = ref_hash;
    write_manifest(dir, m);

    for (std::size_t k = 0; k < run.snaps.size(); ++k)
        save_snapshot(snapshot_path(dir, run.snap_steps[k]), run.snaps[k], g);
    write_text_file(dir + "/trajectory.csv", trajectory_csv(run.traj, cfg.flow.dt, cfg.flow.t0));
    write_text_file(dir + "/events.csv", events_csv(run.traj));
    write_text_file(dir + "/diagnostics.csv", diagnostics_csv(run.diag));

    m["status"] = "complete";
    m["wall_seconds"] = run.wall_seconds;
    m["snapshot_count"] = run.snaps.size();
    std::vector<long> steps = run.snap_steps;
    m["content_hash"] = hash_snapshot_dir(dir, steps);
    write_manifest(dir, m);
}

struct LoadedRun {
    RunConfig cfg;
    RunResult run;
};

/// Read back the parts of a run needed for post-processing (snapshots and
/// wall clock; trajectories stay in their CSVs).
inline LoadedRun read_run_dir(const std::string& dir) {
    const nlohmann::json m = read_manifest(dir);
    LoadedRun out;
    out.cfg = config_from_json(m.at("config"));
    const Grid g(out.cfg.geometry, out.cfg.nx, out.cfg.ny);
    if (m.contains("wall_seconds")) out.run.wall_seconds = m.at("wall_seconds").get<double>();

    std::vector<long> steps;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("snap_", 0) == 0 && name.size() == 16 &&
            name.substr(11) == ".efrs")
            steps.push_back(std::stol(name.substr(5, 6)));
    }
    std::sort(steps.begin(), steps.end());
    for (const long s : steps) {
        out.run.snap_steps.push_back(s);
        out.run.snaps.push_back(load_snapshot(snapshot_path(dir, s), g));
    }
    return out;
}

inline std::string error_series_csv(const ErrorSeries& es) {
    std::string out = "step,time,E_L2_u,E_L2_p,E_H1_u\n";
    for (std::size_t k = 0; k < es.steps.size(); ++k) {
        out += std::to_string(es.steps[k]) + "," + detail::fmt_double(es.time[k]) + "," +
               detail::fmt_double(es.e_l2_u[k]) + "," + detail::fmt_double(es.e_l2_p[k]) + "," +
               detail::fmt_double(es.e_h1_u[k]) + "\n";
    }
    return out;
}

inline std::string pareto_csv(const std::vector<ParetoRow>& rows) {
    std::string out = "variant,k,wall_clock_s,rel_time_pct,avg_Lu,avg_Lgradu,avg_Lp\n";
    for (const ParetoRow& r : rows) {
        out += r.variant + "," + std::to_string(r.k) + "," + detail::fmt_double(r.wall_clock_s) +
               "," + detail::fmt_double(r.rel_time_pct) + "," + detail::fmt_double(r.avg_u) + "," +
               detail::fmt_double(r.avg_gradu) + "," + detail::fmt_double(r.avg_p) + "\n";
    }
    return out;
}

}  // namespace efr
