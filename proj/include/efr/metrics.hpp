#pragma once

/// Post-processing: relative error series, time-averaged global loss
/// contributions, gain percentages, parameter histograms, boxplot summary
/// statistics, and the accuracy-vs-wall-clock Pareto table.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "efr/ops.hpp"
#include "efr/orchestrate.hpp"

namespace efr {

struct ErrorSeries {
    std::vector<long> steps;
    std::vector<double> time;
    std::vector<double> e_l2_u, e_l2_p, e_h1_u;  // NaN where the reference norm vanishes
};

/// Relative L2 velocity/pressure errors and the relative H1 velocity error
/// per stored snapshot.
inline ErrorSeries relative_errors(const RunResult& run, const ReferenceSeries& ref) {
    ErrorSeries out;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < run.snaps.size(); ++k) {
        const long step = run.snap_steps[k];
        const State& a = run.snaps[k];
        const State& r = ref.at(step);

        out.steps.push_back(step);
        out.time.push_back(a.time);

        const VectorField dv = lincomb(1.0, a.velocity, -1.0, r.velocity);
        const double ref_u = l2_norm_sq(r.velocity);
        out.e_l2_u.push_back(ref_u > 0.0 ? std::sqrt(l2_norm_sq(dv) / ref_u) : nan);

        ScalarField dp(a.pressure.grid());
        for (std::size_t m = 0; m < dp.data().size(); ++m)
            dp.data()[m] = a.pressure.data()[m] - r.pressure.data()[m];
        const double ref_p = l2_norm_sq(r.pressure);
        out.e_l2_p.push_back(ref_p > 0.0 ? std::sqrt(l2_norm_sq(dp) / ref_p) : nan);

        const double ref_h1 = ref_u + h1_seminorm_sq(r.velocity);
        const double dif_h1 = l2_norm_sq(dv) + h1_seminorm_sq(dv);
        out.e_h1_u.push_back(ref_h1 > 0.0 ? std::sqrt(dif_h1 / ref_h1) : nan);
    }
    return out;
}

struct AvgContributions {
    double avg_u = 0.0, avg_gradu = 0.0, avg_p = 0.0;
    long samples = 0;
};

/// Arithmetic time average of the three global loss contributions over the
/// stored snapshots. Steps with a vanishing reference norm (and optionally
/// an initial transient) are excluded.
inline AvgContributions time_avg_contributions(const RunResult& run, const ReferenceSeries& ref,
                                               double start_time = -1e300) {
    AvgContributions out;
    double su = 0.0, sg = 0.0, sp = 0.0;
    for (std::size_t k = 0; k < run.snaps.size(); ++k) {
        const State& a = run.snaps[k];
        if (a.time < start_time) continue;
        const State& r = ref.at(run.snap_steps[k]);
        const double ru = l2_norm_sq(r.velocity);
        const double rg = h1_seminorm_sq(r.velocity);
        const double rp = l2_norm_sq(r.pressure);
        if (ru == 0.0 || rg == 0.0 || rp == 0.0) continue;
        su += std::abs((l2_norm_sq(a.velocity) - ru) / ru);
        sg += std::abs((h1_seminorm_sq(a.velocity) - rg) / rg);
        sp += std::abs((l2_norm_sq(a.pressure) - rp) / rp);
        ++out.samples;
    }
    if (out.samples > 0) {
        out.avg_u = su / out.samples;
        out.avg_gradu = sg / out.samples;
        out.avg_p = sp / out.samples;
    }
    return out;
}

/// Accuracy gain of an optimized run over a baseline, in percent.
inline double gain(double opt_error, double baseline_error) {
    if (!(baseline_error > 0.0))
        throw std::domain_error("gain: baseline error must be positive");
    return 100.0 * (baseline_error - opt_error) / baseline_error;
}

/// Normalized histogram: per-bin share of samples, sums to one.
inline std::vector<double> param_histogram(const std::vector<double>& values, int nbins,
                                           double lo, double hi) {
    if (values.empty()) throw InvalidSpec("histogram: empty trajectory");
    if (nbins < 1) throw InvalidSpec("histogram: need at least one bin");
    std::vector<double> out(nbins, 0.0);
    const double width = hi - lo;
    for (const double v : values) {
        int bin = 0;
        if (width > 0.0) {
            bin = static_cast<int>(std::floor((v - lo) / width * nbins));
            bin = std::min(std::max(bin, 0), nbins - 1);
        }
        out[bin] += 1.0;
    }
    for (double& x : out) x /= static_cast<double>(values.size());
    return out;
}

struct SummaryStats {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, mean = 0.0;
};

/// Order statistics with linear-interpolation quantiles. NaN entries
/// (undefined error steps) are excluded.
inline SummaryStats boxplot_stats(const std::vector<double>& series) {
    std::vector<double> x;
    x.reserve(series.size());
    for (const double v : series)
        if (!std::isnan(v)) x.push_back(v);
    if (x.empty()) throw InvalidSpec("boxplot_stats: empty series");
    std::sort(x.begin(), x.end());

    auto quantile = [&](double p) {
        const double h = p * static_cast<double>(x.size() - 1);
        const std::size_t i = static_cast<std::size_t>(std::floor(h));
        if (i + 1 >= x.size()) return x.back();
        return x[i] + (h - i) * (x[i + 1] - x[i]);
    };

    SummaryStats s;
    s.min = x.front();
    s.q1 = quantile(0.25);
    s.median = quantile(0.5);
    s.q3 = quantile(0.75);
    s.max = x.back();
    double sum = 0.0;
    for (const double v : x) sum += v;
    s.mean = sum / static_cast<double>(x.size());
    return s;
}

struct ParetoRow {
    std::string variant;
    long k = 0;
    double wall_clock_s = 0.0;
    double rel_time_pct = 0.0;
    double avg_u = 0.0, avg_gradu = 0.0, avg_p = 0.0;
};

/// One row per run, relative time in percent of the reference wall clock,
/// sorted by (variant, k).
inline std::vector<ParetoRow> pareto_table(std::vector<ParetoRow> rows, double dns_wall_seconds) {
    if (!(dns_wall_seconds > 0.0))
        throw InvalidSpec("pareto_table: reference wall-clock time must be positive");
    for (ParetoRow& r : rows) r.rel_time_pct = 100.0 * r.wall_clock_s / dns_wall_seconds;
    std::sort(rows.begin(), rows.end(), [](const ParetoRow& a, const ParetoRow& b) {
        if (a.variant != b.variant) return a.variant < b.variant;
        return a.k < b.k;
    });
    return rows;
}

}  // namespace efr
