#pragma once

/// Filter and relax steps: the differential filter
/// (I - 2 delta^2 Lap - gamma grad div) wbar = w with the evolve-step
/// Dirichlet data on inlet/walls and zero normal derivative at the outflow,
/// and the convex relaxation between evolved and filtered velocity.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "efr/evolve.hpp"
#include "efr/field.hpp"
#include "efr/grid.hpp"
#include "efr/linsolve.hpp"

namespace efr {

struct EfrParams {
    double delta = 5.62e-4;  // filter radius
    double chi = 0.02;       // relaxation parameter

    void validate() const {
        if (delta < 0.0) throw InvalidSpec("efr: filter radius must be nonnegative");
        if (chi < 0.0 || chi > 1.0)
            throw std::domain_error("efr: relaxation parameter must lie in [0,1]");
    }
};

struct FilterConfig {
    double grad_div_gamma = 0.0;  // 0 disables the grad-div penalty
    double solver_tol = 1e-10;
    long max_iter_factor = 10;

    void validate() const {
        if (grad_div_gamma < 0.0) throw InvalidSpec("filter: gamma must be nonnegative");
    }
};

namespace detail {

/// y = x - 2 delta^2 Lap x - gamma grad(div x) on velocity unknowns.
class FilterOp : public StaggeredOp {
public:
    FilterOp(const Grid& g, double delta, double gamma, const BoundaryData* bd)
        : StaggeredOp(g, bd), dd2_(2.0 * delta * delta), gamma_(gamma) {}

    void operator()(const std::vector<double>& x, std::vector<double>& y) const {
        const Grid& g = g_;
        y.assign(x.size(), 0.0);
        const std::size_t off = g.u_size();
        for (int j = 0; j < g.uny(); ++j)
            for (int i = 0; i < g.unx(); ++i) {
                if (!g.u_unknown(i, j)) continue;
                double val = read_u(x, i, j) - dd2_ * lap_u(x, i, j);
                if (gamma_ != 0.0)
                    val -= gamma_ * (div_cell(x, i, j) - div_cell(x, i - 1, j)) / g.dx();
                y[g.uidx(i, j)] = val;
            }
        for (int j = 0; j < g.vny(); ++j)
            for (int i = 0; i < g.vnx(); ++i) {
                if (!g.v_unknown(i, j)) continue;
                double val = read_v(x, i, j) - dd2_ * lap_v(x, i, j);
                if (gamma_ != 0.0)
                    val -= gamma_ * (div_cell(x, i, j) - div_cell(x, i, j - 1)) / g.dy();
                y[off + g.vidx(i, j)] = val;
            }
    }

private:
    double dd2_, gamma_;
};

}  // namespace detail

/// Apply the differential filter to a velocity field at time t (the filter
/// reuses the time-t Dirichlet data on inlet and walls).
inline VectorField differential_filter(const VectorField& w, double delta, const FilterConfig& fc,
                                       const Grid& g, const FlowConfig& cfg, double t) {
    fc.validate();
    if (delta < 0.0) throw InvalidSpec("filter: radius must be nonnegative");
    if (delta == 0.0 && fc.grad_div_gamma == 0.0) return w;  // identity operator

    const BoundaryData bd(g, cfg, t);
    const std::size_t nflat = detail::flat_size(g);
    const std::size_t off = g.u_size();
    const long max_iter = fc.max_iter_factor * static_cast<long>(g.nx()) * g.ny();

    std::vector<double> wd(nflat, 0.0);
    if (!g.periodic()) {
        for (int j = 0; j < g.uny(); ++j)
            for (int i = 0; i < g.unx(); ++i)
                if (g.u_role(i, j) == FaceRole::dirichlet) wd[g.uidx(i, j)] = bd.u_face(i, j);
        for (int j = 0; j < g.vny(); ++j)
            for (int i = 0; i < g.vnx(); ++i)
                if (g.v_role(i, j) == FaceRole::dirichlet)
                    wd[off + g.vidx(i, j)] = bd.v_face(i, j);
    }

    detail::FilterOp op_hom(g, delta, fc.grad_div_gamma, nullptr);
    detail::FilterOp op_affine(g, delta, fc.grad_div_gamma, &bd);

    std::vector<double> b(nflat, 0.0);
    op_affine(wd, b);
    for (int j = 0; j < g.uny(); ++j)
        for (int i = 0; i < g.unx(); ++i)
            if (g.u_unknown(i, j)) b[g.uidx(i, j)] = w.u(i, j) - b[g.uidx(i, j)];
    for (int j = 0; j < g.vny(); ++j)
        for (int i = 0; i < g.vnx(); ++i)
            if (g.v_unknown(i, j)) b[off + g.vidx(i, j)] = w.v(i, j) - b[off + g.vidx(i, j)];

    // warm start from the unfiltered field
    std::vector<double> x(nflat, 0.0);
    for (int j = 0; j < g.uny(); ++j)
        for (int i = 0; i < g.unx(); ++i)
            if (g.u_unknown(i, j)) x[g.uidx(i, j)] = w.u(i, j);
    for (int j = 0; j < g.vny(); ++j)
        for (int i = 0; i < g.vnx(); ++i)
            if (g.v_unknown(i, j)) x[off + g.vidx(i, j)] = w.v(i, j);

    // the grad-div penalty breaks the symmetry the plain Helmholtz system has
    const SolveStats st = fc.grad_div_gamma == 0.0
                              ? cg(op_hom, b, x, fc.solver_tol, max_iter)
                              : bicgstab(op_hom, b, x, fc.solver_tol, max_iter);
    if (!st.converged)
        throw SolverFailure("filter solve did not converge (residual " +
                                std::to_string(st.residual) + ")",
                            st.residual, static_cast<int>(st.iterations));

    VectorField out(g);
    for (int j = 0; j < g.uny(); ++j)
        for (int i = 0; i < g.unx(); ++i) {
            const FaceRole r = g.periodic() ? FaceRole::unknown : g.u_role(i, j);
            if (r == FaceRole::unknown)
                out.u(i, j) = x[g.uidx(i, j)];
            else if (r == FaceRole::dirichlet)
                out.u(i, j) = bd.u_face(i, j);
        }
    for (int j = 0; j < g.vny(); ++j)
        for (int i = 0; i < g.vnx(); ++i) {
            const FaceRole r = g.periodic() ? FaceRole::unknown : g.v_role(i, j);
            if (r == FaceRole::unknown)
                out.v(i, j) = x[off + g.vidx(i, j)];
            else if (r == FaceRole::dirichlet)
                out.v(i, j) = bd.v_face(i, j);
        }
    if (!g.periodic())
        for (int j = 0; j < g.ny(); ++j)
            if (g.u_role(g.nx(), j) == FaceRole::mirror)
                out.u(g.nx(), j) = out.u(g.nx() - 1, j);
    return out;
}

/// Convex combination (1-chi) w + chi wbar. chi outside [0,1] is a caller
/// bug and is rejected, not clamped.
inline VectorField relax(const VectorField& w, const VectorField& wbar, double chi) {
    if (chi < 0.0 || chi > 1.0)
        throw std::domain_error("relax: chi must lie in [0,1]");
    if (chi == 0.0) return w;
    if (chi == 1.0) return wbar;
    return lincomb(1.0 - chi, w, chi, wbar);
}

/// One full EFR step: evolve, filter (skipped when chi == 0), relax.
/// Pressure is taken from the evolve step.
inline State efr_step(const State& prev, const EfrParams& params, const FlowConfig& cfg,
                      const FilterConfig& fc, const Grid& g) {
    params.validate();
    State evolved = evolve_step(prev, cfg, g);
    if (params.chi == 0.0) return evolved;
    const VectorField wbar =
        differential_filter(evolved.velocity, params.delta, fc, g, cfg, evolved.time);
    evolved.velocity = relax(evolved.velocity, wbar, params.chi);
    return evolved;
}

}  // namespace efr
