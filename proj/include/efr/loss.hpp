#pragma once

/// Local and global objective functionals evaluated for candidate EFR
/// parameters at one optimization instant, and the per-variant objective
/// builders used by the optimization loop.

#include <atomic>
#include <cmath>
#include <memory>
#include <optional>
#include <span>

#include "efr/evolve.hpp"
#include "efr/field.hpp"
#include "efr/filter.hpp"
#include "efr/ops.hpp"

namespace efr {

enum class LossKind : std::uint8_t { local, global };

struct LossSpec {
    LossKind kind = LossKind::global;
    double w_u = 1.0;
    double w_gradu = 0.0;
    double w_p = 0.0;

    void validate() const {
        if (w_u < 0.0 || w_gradu < 0.0 || w_p < 0.0)
            throw InvalidSpec("loss: weights must be nonnegative");
        if (w_p > 0.0 && kind != LossKind::global)
            throw InvalidSpec("loss: pressure contribution requires the global kind");
    }
};

/// Everything one optimization instant needs: the evolved state at t^{n+1}
/// and the restricted reference snapshots it is compared against.
struct LossContext {
    const Grid* grid = nullptr;
    const FlowConfig* flow = nullptr;
    const FilterConfig* filter_cfg = nullptr;
    State evolved;                  // (w^{n+1}, p^{n+1})
    const State* ref_now = nullptr;   // reference at t^{n+1}
    const State* ref_next = nullptr;  // reference at t^{n+2}, used when w_p > 0
};

namespace detail {

inline double mse_velocity(const VectorField& a, const VectorField& b) {
    const Grid& g = a.grid();
    double s = 0.0;
    std::size_t n = 0;
    for (int j = 0; j < g.uny(); ++j)
        for (int i = 0; i < g.unx(); ++i)
            if (g.u_unknown(i, j)) {
                const double d = a.u(i, j) - b.u(i, j);
                s += d * d;
                ++n;
            }
    for (int j = 0; j < g.vny(); ++j)
        for (int i = 0; i < g.vnx(); ++i)
            if (g.v_unknown(i, j)) {
                const double d = a.v(i, j) - b.v(i, j);
                s += d * d;
                ++n;
            }
    return n ? s / static_cast<double>(n) : 0.0;
}

inline double mse_gradients(const VectorField& a, const VectorField& b) {
    const Grid& g = a.grid();
    const CellGradients ga = cell_gradients(a), gb = cell_gradients(b);
    double s = 0.0;
    std::size_t n = 0;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            if (!g.fluid(i, j)) continue;
            const double d0 = ga.dudx(i, j) - gb.dudx(i, j);
            const double d1 = ga.dudy(i, j) - gb.dudy(i, j);
            const double d2 = ga.dvdx(i, j) - gb.dvdx(i, j);
            const double d3 = ga.dvdy(i, j) - gb.dvdy(i, j);
            s += d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3;
            n += 4;
        }
    return n ? s / static_cast<double>(n) : 0.0;
}

inline double relative_sq_discrepancy(double cand_sq, double ref_sq, const char* what) {
    if (ref_sq == 0.0)
        throw DegenerateReference(std::string("global loss: reference ") + what +
                                  " squared norm is zero");
    return std::abs((cand_sq - ref_sq) / ref_sq);
}

}  // namespace detail

/// Mean-squared-error loss against the restricted reference at t^{n+1}.
inline double local_loss(const VectorField& candidate, const LossContext& ctx,
                         const LossSpec& spec) {
    spec.validate();
    if (spec.kind != LossKind::local) throw InvalidSpec("local_loss: spec kind is not local");
    double l = 0.0;
    if (spec.w_u > 0.0)
        l += spec.w_u * detail::mse_velocity(candidate, ctx.ref_now->velocity);
    if (spec.w_gradu > 0.0)
        l += spec.w_gradu * detail::mse_gradients(candidate, ctx.ref_now->velocity);
    return l;
}

/// Candidate fields entering the global loss. next_pressure is the
/// trial-evolve pressure p^{n+2}, present only when the spec weights it.
struct CandidateEval {
    const VectorField* velocity = nullptr;
    const ScalarField* next_pressure = nullptr;
};

/// Relative discrepancy of squared global norms, each term normalized by
/// the corresponding reference squared norm.
inline double global_loss(const CandidateEval& cand, const LossContext& ctx,
                          const LossSpec& spec) {
    spec.validate();
    if (spec.kind != LossKind::global) throw InvalidSpec("global_loss: spec kind is not global");
    double l = 0.0;
    if (spec.w_u > 0.0)
        l += spec.w_u * detail::relative_sq_discrepancy(l2_norm_sq(*cand.velocity),
                                                        l2_norm_sq(ctx.ref_now->velocity),
                                                        "velocity");
    if (spec.w_gradu > 0.0)
        l += spec.w_gradu * detail::relative_sq_discrepancy(h1_seminorm_sq(*cand.velocity),
                                                            h1_seminorm_sq(ctx.ref_now->velocity),
                                                            "velocity gradient");
    if (spec.w_p > 0.0) {
        if (!cand.next_pressure || !ctx.ref_next)
            throw InvalidSpec("global_loss: pressure term requires the trial-evolve pressure");
        l += spec.w_p * detail::relative_sq_discrepancy(l2_norm_sq(*cand.next_pressure),
                                                        l2_norm_sq(ctx.ref_next->pressure),
                                                        "pressure");
    }
    return l;
}

enum class OptVariant : std::uint8_t { chi, delta, delta_chi };

/// Deterministic, reentrant objective over the candidate parameters. The chi
/// variant filters once up front and reuses the result; the delta variants
/// re-solve the filter per evaluation. Counters track the solve accounting.
class Objective {
public:
    struct Stats {
        std::atomic<long> filter_solves{0};
        std::atomic<long> trial_evolves{0};
        std::atomic<long> evaluations{0};
    };

    Objective(OptVariant variant, const LossContext& ctx, const LossSpec& spec,
              double fixed_delta = 0.0)
        : variant_(variant), ctx_(&ctx), spec_(spec), fixed_delta_(fixed_delta),
          stats_(std::make_shared<Stats>()) {
        spec.validate();
        if (variant == OptVariant::chi) {
            cached_wbar_ = differential_filter(ctx.evolved.velocity, fixed_delta,
                                               *ctx.filter_cfg, *ctx.grid, *ctx.flow,
                                               ctx.evolved.time);
            stats_->filter_solves.fetch_add(1, std::memory_order_relaxed);
        }
    }

    int dim() const { return variant_ == OptVariant::delta_chi ? 2 : 1; }

    EfrParams params_from(std::span<const double> mu) const {
        switch (variant_) {
            case OptVariant::chi:
                return EfrParams{fixed_delta_, mu[0]};
            case OptVariant::delta:
                return EfrParams{mu[0], 1.0};
            case OptVariant::delta_chi:
            default:
                return EfrParams{mu[0], mu[1]};
        }
    }

    double operator()(std::span<const double> mu) const {
        stats_->evaluations.fetch_add(1, std::memory_order_relaxed);
        const EfrParams p = params_from(mu);
        const Grid& g = *ctx_->grid;

        VectorField candidate;
        if (variant_ == OptVariant::chi) {
            candidate = relax(ctx_->evolved.velocity, *cached_wbar_, p.chi);
        } else if (p.chi == 0.0) {
            candidate = ctx_->evolved.velocity;
        } else {
            const VectorField wbar = differential_filter(
                ctx_->evolved.velocity, p.delta, *ctx_->filter_cfg, g, *ctx_->flow,
                ctx_->evolved.time);
            stats_->filter_solves.fetch_add(1, std::memory_order_relaxed);
            candidate = relax(ctx_->evolved.velocity, wbar, p.chi);
        }

        if (spec_.kind == LossKind::local) return local_loss(candidate, *ctx_, spec_);

        CandidateEval ce;
        ce.velocity = &candidate;
        std::optional<State> trial;
        if (spec_.w_p > 0.0) {
            State from(g);
            from.velocity = candidate;
            from.pressure = ctx_->evolved.pressure;
            from.time = ctx_->evolved.time;
            trial = trial_evolve(from, *ctx_->flow, g);
            stats_->trial_evolves.fetch_add(1, std::memory_order_relaxed);
            ce.next_pressure = &trial->pressure;
        }
        return global_loss(ce, *ctx_, spec_);
    }

    long filter_solves() const { return stats_->filter_solves.load(); }
    long trial_evolves() const { return stats_->trial_evolves.load(); }
    long evaluations() const { return stats_->evaluations.load(); }

private:
    OptVariant variant_;
    const LossContext* ctx_;
    LossSpec spec_;
    double fixed_delta_;
    std::optional<VectorField> cached_wbar_;
    std::shared_ptr<Stats> stats_;
};

inline Objective make_objective(OptVariant variant, const LossContext& ctx, const LossSpec& spec,
                                double fixed_delta = 0.0) {
    return Objective(variant, ctx, spec, fixed_delta);
}

}  // namespace efr
