#pragma once

/// Evolve step: one BDF1 time step of the incompressible NSE with implicit
/// diffusion, advection linearized about the previous velocity, and an
/// incremental pressure projection enforcing discrete incompressibility.

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "efr/field.hpp"
#include "efr/grid.hpp"
#include "efr/linsolve.hpp"
#include "efr/ops.hpp"

namespace efr {

enum class InitialCondition : std::uint8_t { zero, taylor_green, shear_layer };

/// Parabolic inlet profile, peak value 1.5 at mid-height for the benchmark
/// channel: (6/0.41^2) y (0.41 - y).
inline std::array<double, 2> inlet_profile(double y, double height = 0.41, double peak = 1.5) {
    return {4.0 * peak / (height * height) * y * (height - y), 0.0};
}

using PointFn = std::function<std::array<double, 2>(double x, double y, double t)>;

struct FlowConfig {
    double nu = 1e-4;
    double dt = 4e-3;
    double t0 = 0.0;
    double t_end = 4.0;

    double inlet_peak = 1.5;  // channel inlet parabola peak

    // characteristic scales backing the Reynolds number diagnostic
    double u_ref = 1.0;
    double l_ref = 0.1;

    double upwind_blend = 0.0;  // 0 = central advection (default), 1 = full upwind
    double solver_tol = 1e-10;
    long max_iter_factor = 10;  // iteration cap = factor * nx * ny

    InitialCondition initial = InitialCondition::zero;

    // optional overrides, used by verification setups
    PointFn dirichlet;  // velocity on Dirichlet boundaries
    PointFn forcing;    // momentum source term

    double reynolds() const { return u_ref * l_ref / nu; }
    /// Kolmogorov-style length scale L * Re^(-3/4).
    double kolmogorov_eta() const { return l_ref * std::pow(reynolds(), -0.75); }

    void validate() const {
        if (nu <= 0.0) throw InvalidSpec("flow: viscosity must be positive");
        if (dt <= 0.0) throw InvalidSpec("flow: time step must be positive");
        if (t_end <= t0) throw InvalidSpec("flow: end time must exceed start time");
        if (u_ref <= 0.0 || l_ref <= 0.0)
            throw InvalidSpec("flow: reference scales must be positive");
        if (upwind_blend < 0.0 || upwind_blend > 1.0)
            throw InvalidSpec("flow: upwind blend must lie in [0,1]");
    }
};

/// Dirichlet velocity data evaluated at one time instant: values on inlet,
/// wall, and solid-interface faces, plus tangential wall values entering the
/// ghost closures. Zero on periodic grids.
class BoundaryData {
public:
    BoundaryData(const Grid& g, const FlowConfig& cfg, double t) : grid_(&g) {
        if (g.periodic()) return;
        const bool channel = g.spec().kind == GeometryKind::channel_cylinder;
        auto eval = [&](double x, double y) -> std::array<double, 2> {
            if (cfg.dirichlet) return cfg.dirichlet(x, y, t);
            if (channel && x == 0.0)
                return inlet_profile(y, g.ly(), cfg.inlet_peak);
            return {0.0, 0.0};
        };
        u_inlet_.resize(g.ny());
        for (int j = 0; j < g.ny(); ++j) u_inlet_[j] = eval(0.0, g.u_y(j))[0];
        u_wall_s_.resize(g.nx() + 1);
        u_wall_n_.resize(g.nx() + 1);
        for (int i = 0; i <= g.nx(); ++i) {
            u_wall_s_[i] = eval(g.u_x(i), 0.0)[0];
            u_wall_n_[i] = eval(g.u_x(i), g.ly())[0];
        }
        v_inlet_.resize(g.ny() + 1);
        for (int j = 0; j <= g.ny(); ++j) v_inlet_[j] = eval(0.0, g.v_y(j))[1];
        v_wall_s_.resize(g.nx());
        v_wall_n_.resize(g.nx());
        for (int i = 0; i < g.nx(); ++i) {
            v_wall_s_[i] = eval(g.v_x(i), 0.0)[1];
            v_wall_n_[i] = eval(g.v_x(i), g.ly())[1];
        }
    }

    /// Prescribed value at a Dirichlet u-face (zero on solid interfaces).
    double u_face(int i, int j) const {
        if (grid_->periodic()) return 0.0;
        if (i == 0) return u_inlet_[j];
        return 0.0;  // solid interface / interior
    }
    double v_face(int i, int j) const {
        if (grid_->periodic()) return 0.0;
        if (j == 0) return v_wall_s_[i];
        if (j == grid_->ny()) return v_wall_n_[i];
        return 0.0;  // solid interface / interior
    }

    double u_at_wall(int i, bool north) const {
        return north ? u_wall_n_[i] : u_wall_s_[i];
    }
    double v_at_inlet(int j) const { return v_inlet_[j]; }

private:
    const Grid* grid_;
    std::vector<double> u_inlet_, u_wall_s_, u_wall_n_, v_inlet_, v_wall_s_, v_wall_n_;
};

namespace detail {

inline std::size_t flat_size(const Grid& g) { return g.u_size() + g.v_size(); }

/// Shared stencil machinery for the implicit momentum and filter operators.
/// `affine` mode substitutes actual boundary values into ghosts and Dirichlet
/// faces (used once to fold boundary data into the right-hand side);
/// homogeneous mode is what the Krylov solver iterates on.
class StaggeredOp {
public:
    StaggeredOp(const Grid& g, const BoundaryData* bd) : g_(g), bd_(bd) {}

    bool affine() const { return bd_ != nullptr; }

    // --- component readers with ghost closures -------------------------
    // j may be -1 or ny (wall ghosts); i in [0, nx] plus wrap when periodic.
    double read_u(const std::vector<double>& x, int i, int j) const {
        const Grid& g = g_;
        if (g.periodic()) {
            const int n = g.nx(), m = g.ny();
            return x[g.uidx((i % n + n) % n, (j % m + m) % m)];
        }
        if (j < 0) {
            const double wall = affine() ? bd_->u_at_wall(i, false) : 0.0;
            return 2.0 * wall - read_u(x, i, 0);
        }
        if (j >= g.ny()) {
            const double wall = affine() ? bd_->u_at_wall(i, true) : 0.0;
            return 2.0 * wall - read_u(x, i, g.ny() - 1);
        }
        if (i == g.nx()) return x[g.uidx(g.nx() - 1, j)];  // outflow mirror
        if (affine() && g.u_role(i, j) == FaceRole::dirichlet) return bd_->u_face(i, j);
        return x[g.uidx(i, j)];
    }

    double read_v(const std::vector<double>& x, int i, int j) const {
        const Grid& g = g_;
        const std::size_t off = g.u_size();
        if (g.periodic()) {
            const int n = g.nx(), m = g.ny();
            return x[off + g.vidx((i % n + n) % n, (j % m + m) % m)];
        }
        if (i < 0) {
            const double wall = affine() ? bd_->v_at_inlet(j) : 0.0;
            return 2.0 * wall - read_v(x, 0, j);
        }
        if (i >= g.nx()) return x[off + g.vidx(g.nx() - 1, j)];  // outflow mirror
        if (affine() && g.v_role(i, j) == FaceRole::dirichlet) return bd_->v_face(i, j);
        return x[off + g.vidx(i, j)];
    }

    double lap_u(const std::vector<double>& x, int i, int j) const {
        const double dx2 = g_.dx() * g_.dx(), dy2 = g_.dy() * g_.dy();
        const double c = read_u(x, i, j);
        return (read_u(x, i + 1, j) - 2.0 * c + read_u(x, i - 1, j)) / dx2 +
               (read_u(x, i, j + 1) - 2.0 * c + read_u(x, i, j - 1)) / dy2;
    }
    double lap_v(const std::vector<double>& x, int i, int j) const {
        const double dx2 = g_.dx() * g_.dx(), dy2 = g_.dy() * g_.dy();
        const double c = read_v(x, i, j);
        return (read_v(x, i + 1, j) - 2.0 * c + read_v(x, i - 1, j)) / dx2 +
               (read_v(x, i, j + 1) - 2.0 * c + read_v(x, i, j - 1)) / dy2;
    }

    double div_cell(const std::vector<double>& x, int i, int j) const {
        if (!g_.periodic() && !g_.fluid(i, j)) return 0.0;
        return (read_u(x, i + 1, j) - read_u(x, i, j)) / g_.dx() +
               (read_v(x, i, j + 1) - read_v(x, i, j)) / g_.dy();
    }

protected:
    const Grid& g_;
    const BoundaryData* bd_;
};

/// Implicit momentum operator: x/dt + (a . grad) x - nu Lap x, advection
/// coefficients frozen at the previous velocity.
class MomentumOp : public StaggeredOp {
public:
    MomentumOp(const Grid& g, const FlowConfig& cfg, const VectorField& adv,
               const BoundaryData* bd)
        : StaggeredOp(g, bd), cfg_(cfg), adv_(adv) {}

    void operator()(const std::vector<double>& x, std::vector<double>& y) const {
        const Grid& g = g_;
        const double dx = g.dx(), dy = g.dy();
        const double idt = 1.0 / cfg_.dt, nu = cfg_.nu, th = cfg_.upwind_blend;
        y.assign(x.size(), 0.0);

        auto deriv = [th](double vel, double fm, double f0, double fp, double h) {
            const double central = (fp - fm) / (2.0 * h);
            const double upwind = vel >= 0.0 ? (f0 - fm) / h : (fp - f0) / h;
            return (1.0 - th) * central + th * upwind;
        };

        for (int j = 0; j < g.uny(); ++j) {
            for (int i = 0; i < g.unx(); ++i) {
                if (!g.u_unknown(i, j)) continue;
                const double U = adv_.u(i, j);
                const double V = 0.25 * (adv_.v(i - 1, j) + adv_.v(i, j) + adv_.v(i - 1, j + 1) +
                                         adv_.v(i, j + 1));
                const double c = read_u(x, i, j);
                const double ddx = deriv(U, read_u(x, i - 1, j), c, read_u(x, i + 1, j), dx);
                const double ddy = deriv(V, read_u(x, i, j - 1), c, read_u(x, i, j + 1), dy);
                y[g.uidx(i, j)] = c * idt + U * ddx + V * ddy - nu * lap_u(x, i, j);
            }
        }
        const std::size_t off = g.u_size();
        for (int j = 0; j < g.vny(); ++j) {
            for (int i = 0; i < g.vnx(); ++i) {
                if (!g.v_unknown(i, j)) continue;
                const double V = adv_.v(i, j);
                const double U = 0.25 * (adv_.u(i, j - 1) + adv_.u(i + 1, j - 1) + adv_.u(i, j) +
                                         adv_.u(i + 1, j));
                const double c = read_v(x, i, j);
                const double ddy = deriv(V, read_v(x, i, j - 1), c, read_v(x, i, j + 1), dy);
                const double ddx = deriv(U, read_v(x, i - 1, j), c, read_v(x, i + 1, j), dx);
                y[off + g.vidx(i, j)] = c * idt + U * ddx + V * ddy - nu * lap_v(x, i, j);
            }
        }
    }

private:
    const FlowConfig& cfg_;
    const VectorField& adv_;
};

/// Cell-centered pressure Poisson operator, y = -Lap x, with zero-flux
/// closures at walls/inlet/solid links and a Dirichlet fold at the outflow.
class PoissonOp {
public:
    explicit PoissonOp(const Grid& g) : g_(g) {}

    void operator()(const std::vector<double>& x, std::vector<double>& y) const {
        const Grid& g = g_;
        const double ax = 1.0 / (g.dx() * g.dx()), ay = 1.0 / (g.dy() * g.dy());
        y.assign(x.size(), 0.0);
        for (int j = 0; j < g.ny(); ++j) {
            for (int i = 0; i < g.nx(); ++i) {
                if (!g.periodic() && !g.fluid(i, j)) continue;
                const double c = x[g.cell(i, j)];
                double s = 0.0;
                // east
                if (g.periodic())
                    s += ax * (c - x[g.cell((i + 1) % g.nx(), j)]);
                else if (i == g.nx() - 1)
                    s += ax * 2.0 * c;  // outflow: ghost = -c
                else if (g.fluid(i + 1, j))
                    s += ax * (c - x[g.cell(i + 1, j)]);
                // west
                if (g.periodic())
                    s += ax * (c - x[g.cell((i - 1 + g.nx()) % g.nx(), j)]);
                else if (i > 0 && g.fluid(i - 1, j))
                    s += ax * (c - x[g.cell(i - 1, j)]);
                // north
                if (g.periodic())
                    s += ay * (c - x[g.cell(i, (j + 1) % g.ny())]);
                else if (j < g.ny() - 1 && g.fluid(i, j + 1))
                    s += ay * (c - x[g.cell(i, j + 1)]);
                // south
                if (g.periodic())
                    s += ay * (c - x[g.cell(i, (j - 1 + g.ny()) % g.ny())]);
                else if (j > 0 && g.fluid(i, j - 1))
                    s += ay * (c - x[g.cell(i, j - 1)]);
                y[g.cell(i, j)] = s;
            }
        }
    }

private:
    const Grid& g_;
};

inline void subtract_mean(std::vector<double>& x, const Grid& g) {
    double mean = 0.0;
    std::size_t n = 0;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            if (g.periodic() || g.fluid(i, j)) {
                mean += x[g.cell(i, j)];
                ++n;
            }
    mean /= static_cast<double>(n);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            if (g.periodic() || g.fluid(i, j)) x[g.cell(i, j)] -= mean;
}

/// Solve the pressure Poisson problem -Lap phi = rhs. Periodic grids use a
/// multigrid-preconditioned CG and the zero-mean gauge.
inline SolveStats solve_poisson(const Grid& g, std::vector<double>& phi, std::vector<double> rhs,
                                double rel_tol, long max_iter) {
    PoissonOp A(g);
    const bool zero_mean = g.periodic();
    if (zero_mean) subtract_mean(rhs, g);

    SolveStats st;
    if (g.periodic() && PeriodicPoissonMG::suitable(g.nx(), g.ny())) {
        PeriodicPoissonMG mg(g.nx(), g.ny(), g.dx(), g.dy());
        auto prec = [&mg](const std::vector<double>& r, std::vector<double>& z) { mg.apply(r, z); };
        st = cg(A, rhs, phi, rel_tol, max_iter, prec);
    } else {
        st = cg(A, rhs, phi, rel_tol, max_iter);
    }
    if (zero_mean) subtract_mean(phi, g);
    return st;
}

}  // namespace detail

/// Advance one BDF1 step. Linear solves use the configured relative
/// tolerance; non-convergence raises SolverFailure, NaN raises BlowUp.
inline State evolve_step(const State& prev, const FlowConfig& cfg, const Grid& g) {
    cfg.validate();
    if (!all_finite(prev))
        throw BlowUp("evolve: NaN in input state at t=" + std::to_string(prev.time), prev.time);
    const double t_new = prev.time + cfg.dt;
    const BoundaryData bd(g, cfg, t_new);
    const long cells = static_cast<long>(g.nx()) * g.ny();
    const long max_iter = cfg.max_iter_factor * cells;

    const std::size_t nflat = detail::flat_size(g);
    const std::size_t off = g.u_size();

    // boundary-value vector (Dirichlet faces carry data, unknowns zero)
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

    // right-hand side: u^n/dt + f^{n+1} - grad p^n, minus the operator action
    // of the boundary values
    detail::MomentumOp op_hom(g, cfg, prev.velocity, nullptr);
    detail::MomentumOp op_affine(g, cfg, prev.velocity, &bd);

    std::vector<double> b(nflat, 0.0);
    op_affine(wd, b);
    for (double& x : b) x = -x;

    const double idt = 1.0 / cfg.dt;
    for (int j = 0; j < g.uny(); ++j)
        for (int i = 0; i < g.unx(); ++i) {
            if (!g.u_unknown(i, j)) continue;
            const int im = g.periodic() ? (i - 1 + g.nx()) % g.nx() : i - 1;
            double rhs = prev.velocity.u(i, j) * idt;
            rhs -= (prev.pressure(i, j) - prev.pressure(im, j)) / g.dx();
            if (cfg.forcing) rhs += cfg.forcing(g.u_x(i), g.u_y(j), t_new)[0];
            b[g.uidx(i, j)] += rhs;
        }
    for (int j = 0; j < g.vny(); ++j)
        for (int i = 0; i < g.vnx(); ++i) {
            if (!g.v_unknown(i, j)) continue;
            const int jm = g.periodic() ? (j - 1 + g.ny()) % g.ny() : j - 1;
            double rhs = prev.velocity.v(i, j) * idt;
            rhs -= (prev.pressure(i, j) - prev.pressure(i, jm)) / g.dy();
            if (cfg.forcing) rhs += cfg.forcing(g.v_x(i), g.v_y(j), t_new)[1];
            b[off + g.vidx(i, j)] += rhs;
        }

    // warm start from the previous interior velocity
    std::vector<double> x(nflat, 0.0);
    for (int j = 0; j < g.uny(); ++j)
        for (int i = 0; i < g.unx(); ++i)
            if (g.u_unknown(i, j)) x[g.uidx(i, j)] = prev.velocity.u(i, j);
    for (int j = 0; j < g.vny(); ++j)
        for (int i = 0; i < g.vnx(); ++i)
            if (g.v_unknown(i, j)) x[off + g.vidx(i, j)] = prev.velocity.v(i, j);

    const SolveStats mstat = bicgstab(op_hom, b, x, cfg.solver_tol, max_iter);
    if (!mstat.converged)
        throw SolverFailure("momentum solve did not converge (residual " +
                                std::to_string(mstat.residual) + ")",
                            mstat.residual, static_cast<int>(mstat.iterations));

    // assemble the tentative velocity w*
    State next(g);
    next.time = t_new;
    for (int j = 0; j < g.uny(); ++j)
        for (int i = 0; i < g.unx(); ++i) {
            const FaceRole r = g.periodic() ? FaceRole::unknown : g.u_role(i, j);
            if (r == FaceRole::unknown)
                next.velocity.u(i, j) = x[g.uidx(i, j)];
            else if (r == FaceRole::dirichlet)
                next.velocity.u(i, j) = bd.u_face(i, j);
        }
    for (int j = 0; j < g.vny(); ++j)
        for (int i = 0; i < g.vnx(); ++i) {
            const FaceRole r = g.periodic() ? FaceRole::unknown : g.v_role(i, j);
            if (r == FaceRole::unknown)
                next.velocity.v(i, j) = x[off + g.vidx(i, j)];
            else if (r == FaceRole::dirichlet)
                next.velocity.v(i, j) = bd.v_face(i, j);
        }
    if (!g.periodic())
        for (int j = 0; j < g.ny(); ++j)
            if (g.u_role(g.nx(), j) == FaceRole::mirror)
                next.velocity.u(g.nx(), j) = next.velocity.u(g.nx() - 1, j);

    // pressure projection
    const ScalarField div_star = divergence(next.velocity);
    std::vector<double> rhs(g.cell_count(), 0.0);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            if (g.periodic() || g.fluid(i, j)) rhs[g.cell(i, j)] = -div_star(i, j) * idt;

    std::vector<double> phi(g.cell_count(), 0.0);
    const SolveStats pstat = detail::solve_poisson(g, phi, std::move(rhs), cfg.solver_tol, max_iter);
    if (!pstat.converged)
        throw SolverFailure("pressure solve did not converge (residual " +
                                std::to_string(pstat.residual) + ")",
                            pstat.residual, static_cast<int>(pstat.iterations));

    // velocity correction and incremental pressure update
    for (int j = 0; j < g.uny(); ++j)
        for (int i = 0; i < g.unx(); ++i) {
            if (!g.u_unknown(i, j)) continue;
            const int im = g.periodic() ? (i - 1 + g.nx()) % g.nx() : i - 1;
            next.velocity.u(i, j) -=
                cfg.dt * (phi[g.cell(i, j)] - phi[g.cell(im, j)]) / g.dx();
        }
    for (int j = 0; j < g.vny(); ++j)
        for (int i = 0; i < g.vnx(); ++i) {
            if (!g.v_unknown(i, j)) continue;
            const int jm = g.periodic() ? (j - 1 + g.ny()) % g.ny() : j - 1;
            next.velocity.v(i, j) -=
                cfg.dt * (phi[g.cell(i, j)] - phi[g.cell(i, jm)]) / g.dy();
        }
    if (!g.periodic())
        for (int j = 0; j < g.ny(); ++j)
            if (g.u_role(g.nx(), j) == FaceRole::mirror)
                next.velocity.u(g.nx(), j) += cfg.dt * 2.0 * phi[g.cell(g.nx() - 1, j)] / g.dx();

    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            if (g.periodic() || g.fluid(i, j))
                next.pressure(i, j) = prev.pressure(i, j) + phi[g.cell(i, j)];

    if (!all_finite(next))
        throw BlowUp("evolve: NaN detected at t=" + std::to_string(t_new), t_new);
    return next;
}

/// Identical computation to evolve_step; exists so loss evaluation can ask
/// for the next-step pressure without touching the caller's trajectory.
inline State trial_evolve(const State& prev, const FlowConfig& cfg, const Grid& g) {
    return evolve_step(prev, cfg, g);
}

/// Initial states for the built-in problems, sampled at staggered locations.
inline State make_initial_state(const Grid& g, const FlowConfig& cfg) {
    State s(g);
    s.time = cfg.t0;
    switch (cfg.initial) {
        case InitialCondition::zero:
            break;
        case InitialCondition::taylor_green: {
            const double kx = 2.0 * M_PI / g.lx(), ky = 2.0 * M_PI / g.ly();
            for (int j = 0; j < g.uny(); ++j)
                for (int i = 0; i < g.unx(); ++i)
                    s.velocity.u(i, j) = std::sin(kx * g.u_x(i)) * std::cos(ky * g.u_y(j));
            for (int j = 0; j < g.vny(); ++j)
                for (int i = 0; i < g.vnx(); ++i)
                    s.velocity.v(i, j) = -std::cos(kx * g.v_x(i)) * std::sin(ky * g.v_y(j));
            break;
        }
        case InitialCondition::shear_layer: {
            // two tanh layers at 1/4 and 3/4 height plus a sinusoidal
            // cross-stream perturbation
            const double w = g.ly() / 30.0, eps = 0.05;
            for (int j = 0; j < g.uny(); ++j)
                for (int i = 0; i < g.unx(); ++i) {
                    const double y = g.u_y(j);
                    s.velocity.u(i, j) = y <= 0.5 * g.ly()
                                             ? std::tanh((y - 0.25 * g.ly()) / w)
                                             : std::tanh((0.75 * g.ly() - y) / w);
                }
            for (int j = 0; j < g.vny(); ++j)
                for (int i = 0; i < g.vnx(); ++i)
                    s.velocity.v(i, j) = eps * std::sin(2.0 * M_PI * g.v_x(i) / g.lx());
            break;
        }
    }
    return s;
}

}  // namespace efr
