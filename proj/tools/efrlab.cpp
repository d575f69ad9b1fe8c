// efrlab: regularized incompressible-flow runs with evolve-filter-relax and
// data-driven time-adaptive parameter optimization.
//
// Subcommands:
//   dns <config> --out <dir>             generate the restricted reference series
//   run <config> --ref <dir> --out <dir> baseline or optimized run
//   metrics --run <dir> --ref <dir> --out <csv>
//   pareto --runs <dir>... --ref <dir> --out <csv>
//   export-vtk --run <dir> --step <n>

#include <CLI11.hpp>

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "efr/config.hpp"
#include "efr/metrics.hpp"
#include "efr/orchestrate.hpp"
#include "efr/rundir.hpp"
#include "efr/version.hpp"
#include "efr/vtk.hpp"

namespace {

int worker_count(std::size_t jobs) {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("EFRLAB_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = static_cast<unsigned>(cap);
    }
    return static_cast<int>(std::min<std::size_t>(n, jobs));
}

int cmd_dns(const std::string& config_path, const std::string& out_dir) {
    efr::RunConfig cfg = efr::parse_config(config_path);
    cfg.variant = efr::RunVariant::dns;
    cfg.validate();
    if (out_dir.empty()) throw efr::ConfigError("dns: no output directory (use --out)");

    const efr::ReferenceSeries ref = efr::run_dns(cfg);
    efr::write_reference_dir(out_dir, cfg, ref);
    std::cout << "dns: " << ref.snaps.size() << " snapshots -> " << out_dir << " ("
              << ref.wall_seconds << " s)\n";
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& ref_dir,
            const std::string& out_dir) {
    const efr::RunConfig cfg = efr::parse_config(config_path);
    if (out_dir.empty()) throw efr::ConfigError("run: no output directory (use --out)");

    efr::RunResult result;
    std::uint64_t ref_hash = 0;
    if (efr::is_opt_variant(cfg.variant)) {
        if (ref_dir.empty())
            throw efr::ConfigError("run: optimized variants need --ref <reference dir>");
        const efr::LoadedReference loaded = efr::read_reference_dir(ref_dir);
        result = efr::run_opt_efr(cfg, loaded.ref);
        ref_hash = efr::read_manifest(ref_dir).value("content_hash", std::uint64_t{0});
    } else {
        result = efr::run_baseline(cfg);
    }
    efr::write_run_dir(out_dir, cfg, result, ref_hash);
    std::cout << "run[" << efr::to_string(cfg.variant) << "]: " << result.snaps.size()
              << " snapshots -> " << out_dir << " (" << result.wall_seconds << " s)\n";
    return 0;
}

int cmd_metrics(const std::string& run_dir, const std::string& ref_dir, const std::string& out) {
    const efr::LoadedRun run = efr::read_run_dir(run_dir);
    const efr::LoadedReference ref = efr::read_reference_dir(ref_dir);
    const efr::ErrorSeries es = efr::relative_errors(run.run, ref.ref);
    efr::write_text_file(out, efr::error_series_csv(es));
    std::cout << "metrics: " << es.steps.size() << " rows -> " << out << "\n";
    return 0;
}

int cmd_pareto(const std::vector<std::string>& run_dirs, const std::string& ref_dir,
               const std::string& out) {
    const efr::LoadedReference ref = efr::read_reference_dir(ref_dir);

    std::vector<efr::ParetoRow> rows(run_dirs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= run_dirs.size()) return;
            const efr::LoadedRun run = efr::read_run_dir(run_dirs[k]);
            const efr::AvgContributions avg = efr::time_avg_contributions(run.run, ref.ref);
            efr::ParetoRow& r = rows[k];
            r.variant = efr::to_string(run.cfg.variant);
            r.k = run.cfg.cadence;
            r.wall_clock_s = run.run.wall_seconds;
            r.avg_u = avg.avg_u;
            r.avg_gradu = avg.avg_gradu;
            r.avg_p = avg.avg_p;
        }
    };
    const int workers = worker_count(run_dirs.size());
    std::vector<std::thread> pool;
    for (int t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
    for (std::thread& t : pool) t.join();

    const std::vector<efr::ParetoRow> table =
        efr::pareto_table(std::move(rows), ref.ref.wall_seconds);
    efr::write_text_file(out, efr::pareto_csv(table));
    std::cout << "pareto: " << table.size() << " rows -> " << out << "\n";
    return 0;
}

int cmd_export_vtk(const std::string& run_dir, long step, const std::string& out_override) {
    const nlohmann::json m = efr::read_manifest(run_dir);
    const efr::RunConfig cfg = efr::config_from_json(m.at("config"));
    const efr::Grid g(cfg.geometry, cfg.nx, cfg.ny);
    const efr::State s = efr::load_snapshot(efr::snapshot_path(run_dir, step), g);
    const std::string out =
        out_override.empty() ? run_dir + "/snap_" + std::to_string(step) + ".vtk" : out_override;
    efr::export_vtk(out, s, g);
    std::cout << "export-vtk: step " << step << " -> " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"efrlab: evolve-filter-relax flow runs with adaptive parameter optimization"};
    app.set_version_flag("--version", efr::kVersion);
    app.require_subcommand(1);

    std::string config_path, ref_dir, run_dir, out_path;
    std::vector<std::string> run_dirs;
    long step = 0;

    CLI::App* dns = app.add_subcommand("dns", "generate the restricted reference series");
    dns->add_option("config", config_path, "run configuration file")->required();
    dns->add_option("--out", out_path, "output directory")->required();

    CLI::App* run = app.add_subcommand("run", "baseline or optimized run");
    run->add_option("config", config_path, "run configuration file")->required();
    run->add_option("--ref", ref_dir, "reference directory (optimized variants)");
    run->add_option("--out", out_path, "output directory")->required();

    CLI::App* metrics = app.add_subcommand("metrics", "relative error series");
    metrics->add_option("--run", run_dir, "run directory")->required();
    metrics->add_option("--ref", ref_dir, "reference directory")->required();
    metrics->add_option("--out", out_path, "output csv")->required();

    CLI::App* pareto = app.add_subcommand("pareto", "accuracy vs wall-clock table");
    pareto->add_option("--runs", run_dirs, "run directories")->required()->expected(-1);
    pareto->add_option("--ref", ref_dir, "reference directory")->required();
    pareto->add_option("--out", out_path, "output csv")->required();

    CLI::App* vtk = app.add_subcommand("export-vtk", "legacy VTK export of one snapshot");
    vtk->add_option("--run", run_dir, "run directory")->required();
    vtk->add_option("--step", step, "snapshot step index")->required();
    vtk->add_option("--out", out_path, "output file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (dns->parsed()) return cmd_dns(config_path, out_path);
        if (run->parsed()) return cmd_run(config_path, ref_dir, out_path);
        if (metrics->parsed()) return cmd_metrics(run_dir, ref_dir, out_path);
        if (pareto->parsed()) return cmd_pareto(run_dirs, ref_dir, out_path);
        if (vtk->parsed()) return cmd_export_vtk(run_dir, step, out_path);
    } catch (const std::exception& e) {
        std::cerr << "efrlab: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
