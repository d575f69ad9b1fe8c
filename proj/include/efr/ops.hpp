#pragma once

/// Discrete differential and integral operators on MAC fields: norms,
/// divergence, gradients, Laplacian, advection, and small vector helpers.
/// Quadrature is midpoint (cell-area weighting) throughout.

#include <algorithm>
#include <cmath>
#include <limits>

#include "efr/field.hpp"

namespace efr {

/// Integral of f^2 over fluid unknowns, midpoint quadrature.
inline double l2_norm_sq(const ScalarField& f) {
    const Grid& g = f.grid();
    double s = 0.0;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            if (g.fluid(i, j)) s += f(i, j) * f(i, j);
    return s * g.cell_area();
}

inline double l2_norm_sq(const VectorField& f) {
    const Grid& g = f.grid();
    double s = 0.0;
    for (int j = 0; j < g.uny(); ++j)
        for (int i = 0; i < g.unx(); ++i)
            if (g.u_unknown(i, j)) s += f.u(i, j) * f.u(i, j);
    for (int j = 0; j < g.vny(); ++j)
        for (int i = 0; i < g.vnx(); ++i)
            if (g.v_unknown(i, j)) s += f.v(i, j) * f.v(i, j);
    return s * g.cell_area();
}

/// Velocity gradient sampled at cell centers. One stencil shared by the
/// H1 seminorm and the gradient terms of the loss functionals.
struct CellGradients {
    ScalarField dudx, dudy, dvdx, dvdy;
    explicit CellGradients(const Grid& g) : dudx(g), dudy(g), dvdx(g), dvdy(g) {}
};

inline CellGradients cell_gradients(const VectorField& f) {
    const Grid& g = f.grid();
    const double dx = g.dx(), dy = g.dy();
    CellGradients out(g);
    const bool per = g.periodic();

    auto uc = [&](int i, int j) { return 0.5 * (f.u(i, j) + f.u(i + 1, j)); };
    auto vc = [&](int i, int j) { return 0.5 * (f.v(i, j) + f.v(i, j + 1)); };
    auto cell_ok = [&](int i, int j) {
        if (per) return true;
        return i >= 0 && i < g.nx() && j >= 0 && j < g.ny() && g.fluid(i, j);
    };

    for (int j = 0; j < g.ny(); ++j) {
        for (int i = 0; i < g.nx(); ++i) {
            if (!g.fluid(i, j)) continue;
            out.dudx(i, j) = (f.u(i + 1, j) - f.u(i, j)) / dx;
            out.dvdy(i, j) = (f.v(i, j + 1) - f.v(i, j)) / dy;

            // central differences of cell-centered averages; one-sided where
            // the neighbor cell is outside the fluid
            const bool n = cell_ok(i, j + 1), s = cell_ok(i, j - 1);
            if (n && s)
                out.dudy(i, j) = (uc(i, j + 1) - uc(i, j - 1)) / (2.0 * dy);
            else if (n)
                out.dudy(i, j) = (uc(i, j + 1) - uc(i, j)) / dy;
            else if (s)
                out.dudy(i, j) = (uc(i, j) - uc(i, j - 1)) / dy;
            else
                out.dudy(i, j) = 0.0;

            const bool e = cell_ok(i + 1, j), w = cell_ok(i - 1, j);
            if (e && w)
                out.dvdx(i, j) = (vc(i + 1, j) - vc(i - 1, j)) / (2.0 * dx);
            else if (e)
                out.dvdx(i, j) = (vc(i + 1, j) - vc(i, j)) / dx;
            else if (w)
                out.dvdx(i, j) = (vc(i, j) - vc(i - 1, j)) / dx;
            else
                out.dvdx(i, j) = 0.0;
        }
    }
    return out;
}

/// Integral of |grad u|^2 over fluid cells.
inline double h1_seminorm_sq(const VectorField& f) {
    const Grid& g = f.grid();
    const CellGradients gr = cell_gradients(f);
    double s = 0.0;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            if (g.fluid(i, j))
                s += gr.dudx(i, j) * gr.dudx(i, j) + gr.dudy(i, j) * gr.dudy(i, j) +
                     gr.dvdx(i, j) * gr.dvdx(i, j) + gr.dvdy(i, j) * gr.dvdy(i, j);
    return s * g.cell_area();
}

/// Cell-centered discrete divergence from face differences.
inline ScalarField divergence(const VectorField& f) {
    const Grid& g = f.grid();
    ScalarField out(g);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            if (g.fluid(i, j))
                out(i, j) = (f.u(i + 1, j) - f.u(i, j)) / g.dx() +
                            (f.v(i, j + 1) - f.v(i, j)) / g.dy();
    return out;
}

inline double avg_abs_divergence(const VectorField& f) {
    const Grid& g = f.grid();
    const ScalarField d = divergence(f);
    double s = 0.0;
    std::size_t n = 0;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            if (g.fluid(i, j)) {
                s += std::abs(d(i, j));
                ++n;
            }
    return n ? s / n : 0.0;
}

/// Face-centered gradient of a cell-centered scalar. Non-unknown faces are
/// left at zero (homogeneous Neumann across walls and solid interfaces).
inline VectorField gradient(const ScalarField& p) {
    const Grid& g = p.grid();
    VectorField out(g);
    if (g.periodic()) {
        for (int j = 0; j < g.ny(); ++j)
            for (int i = 0; i < g.nx(); ++i) {
                const int im = (i - 1 + g.nx()) % g.nx();
                const int jm = (j - 1 + g.ny()) % g.ny();
                out.u(i, j) = (p(i, j) - p(im, j)) / g.dx();
                out.v(i, j) = (p(i, j) - p(i, jm)) / g.dy();
            }
        return out;
    }
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 1; i < g.nx(); ++i)
            if (g.u_unknown(i, j)) out.u(i, j) = (p(i, j) - p(i - 1, j)) / g.dx();
    for (int j = 1; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            if (g.v_unknown(i, j)) out.v(i, j) = (p(i, j) - p(i, j - 1)) / g.dy();
    return out;
}

/// Five-point Laplacian of a cell-centered scalar; zero-flux closure at
/// walls, solid interfaces, and domain boundaries (compatible with
/// divergence(gradient(.))).
inline ScalarField laplacian(const ScalarField& p) {
    const Grid& g = p.grid();
    ScalarField out(g);
    const double ax = 1.0 / (g.dx() * g.dx()), ay = 1.0 / (g.dy() * g.dy());
    auto link = [&](int i, int j) {
        if (g.periodic()) return true;
        return i >= 0 && i < g.nx() && j >= 0 && j < g.ny() && g.fluid(i, j);
    };
    auto val = [&](int i, int j) {
        if (g.periodic()) {
            const int ii = (i % g.nx() + g.nx()) % g.nx();
            const int jj = (j % g.ny() + g.ny()) % g.ny();
            return p(ii, jj);
        }
        return p(i, j);
    };
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            if (!g.fluid(i, j)) continue;
            double s = 0.0;
            if (link(i + 1, j)) s += ax * (val(i + 1, j) - val(i, j));
            if (link(i - 1, j)) s += ax * (val(i - 1, j) - val(i, j));
            if (link(i, j + 1)) s += ay * (val(i, j + 1) - val(i, j));
            if (link(i, j - 1)) s += ay * (val(i, j - 1) - val(i, j));
            out(i, j) = s;
        }
    return out;
}

/// Explicit advection term (adv . grad) f at face centers, central
/// differences with an optional first-order upwind blend in [0,1].
inline VectorField advect(const VectorField& adv, const VectorField& f, double upwind_blend = 0.0) {
    const Grid& g = f.grid();
    const double dx = g.dx(), dy = g.dy();
    VectorField out(g);
    const double th = upwind_blend;

    auto deriv = [th](double vel, double fm, double f0, double fp, double h) {
        const double central = (fp - fm) / (2.0 * h);
        const double upwind = vel >= 0.0 ? (f0 - fm) / h : (fp - f0) / h;
        return (1.0 - th) * central + th * upwind;
    };

    for (int j = 0; j < g.uny(); ++j)
        for (int i = 0; i < g.unx(); ++i) {
            if (!g.u_unknown(i, j)) continue;
            const double U = adv.u(i, j);
            const double V = 0.25 * (adv.v(i - 1, j) + adv.v(i, j) + adv.v(i - 1, j + 1) +
                                     adv.v(i, j + 1));
            const double ddx = deriv(U, f.u(i - 1, j), f.u(i, j), f.u(i + 1, j), dx);
            double fm = (j > 0 || g.periodic()) ? f.u(i, j - 1) : -f.u(i, j);
            double fp = (j < g.ny() - 1 || g.periodic()) ? f.u(i, j + 1) : -f.u(i, j);
            const double ddy = deriv(V, fm, f.u(i, j), fp, dy);
            out.u(i, j) = U * ddx + V * ddy;
        }
    for (int j = 0; j < g.vny(); ++j)
        for (int i = 0; i < g.vnx(); ++i) {
            if (!g.v_unknown(i, j)) continue;
            const double V = adv.v(i, j);
            const double U = 0.25 * (adv.u(i, j - 1) + adv.u(i + 1, j - 1) + adv.u(i, j) +
                                     adv.u(i + 1, j));
            const double ddy = deriv(V, f.v(i, j - 1), f.v(i, j), f.v(i, j + 1), dy);
            double fm = (i > 0 || g.periodic()) ? f.v(i - 1, j) : -f.v(i, j);
            double fp = (i < g.nx() - 1 || g.periodic()) ? f.v(i + 1, j) : -f.v(i, j);
            const double ddx = deriv(U, fm, f.v(i, j), fp, dx);
            out.v(i, j) = U * ddx + V * ddy;
        }
    return out;
}

/// y = a*x + y over both components.
inline void axpy(double a, const VectorField& x, VectorField& y) {
    for (std::size_t k = 0; k < y.u_data().size(); ++k) y.u_data()[k] += a * x.u_data()[k];
    for (std::size_t k = 0; k < y.v_data().size(); ++k) y.v_data()[k] += a * x.v_data()[k];
}

/// out = a*x + b*y.
inline VectorField lincomb(double a, const VectorField& x, double b, const VectorField& y) {
    VectorField out(x.grid());
    for (std::size_t k = 0; k < out.u_data().size(); ++k)
        out.u_data()[k] = a * x.u_data()[k] + b * y.u_data()[k];
    for (std::size_t k = 0; k < out.v_data().size(); ++k)
        out.v_data()[k] = a * x.v_data()[k] + b * y.v_data()[k];
    return out;
}

inline double max_abs(const VectorField& f) {
    double m = 0.0;
    for (const double x : f.u_data()) m = std::max(m, std::abs(x));
    for (const double x : f.v_data()) m = std::max(m, std::abs(x));
    return m;
}

inline double max_abs(const ScalarField& f) {
    double m = 0.0;
    for (const double x : f.data()) m = std::max(m, std::abs(x));
    return m;
}

inline bool all_finite(const VectorField& f) {
    for (const double x : f.u_data())
        if (!std::isfinite(x)) return false;
    for (const double x : f.v_data())
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const State& s) {
    if (!all_finite(s.velocity)) return false;
    for (const double x : s.pressure.data())
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace efr
