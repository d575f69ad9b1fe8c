#pragma once

/// Matrix-free Krylov solvers (CG, BiCGStab) and a geometric multigrid
/// V-cycle preconditioner for the periodic cell-centered Poisson operator.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "efr/errors.hpp"

namespace efr {

struct SolveStats {
    long iterations = 0;
    double residual = 0.0;  // relative to ||b||
    bool converged = false;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace detail

/// Preconditioned conjugate gradient for SPD operators. `apply(x, y)` writes
/// y = A x; `prec(r, z)` writes z ~ A^-1 r (pass nullptr for identity).
template <class Apply>
SolveStats cg(Apply&& apply, const std::vector<double>& b, std::vector<double>& x, double rel_tol,
              long max_iter,
              const std::function<void(const std::vector<double>&, std::vector<double>&)>& prec =
                  nullptr) {
    const std::size_t n = b.size();
    SolveStats st;
    const double bnorm = detail::norm(b);
    if (bnorm == 0.0) {
        x.assign(n, 0.0);
        st.converged = true;
        return st;
    }

    std::vector<double> r(n), z(n), p(n), q(n);
    if (x.size() != n) x.assign(n, 0.0);
    apply(x, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];

    if (prec)
        prec(r, z);
    else
        z = r;
    p = z;
    double rz = detail::dot(r, z);

    for (long it = 0; it < max_iter; ++it) {
        apply(p, q);
        const double pq = detail::dot(p, q);
        if (pq == 0.0) break;
        const double alpha = rz / pq;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        st.iterations = it + 1;
        st.residual = detail::norm(r) / bnorm;
        if (st.residual <= rel_tol) {
            st.converged = true;
            return st;
        }
        if (!std::isfinite(st.residual)) break;
        if (prec)
            prec(r, z);
        else
            z = r;
        const double rz_new = detail::dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    std::vector<double> tmp(n);
    apply(x, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = b[i] - tmp[i];
    st.residual = detail::norm(tmp) / bnorm;
    st.converged = st.residual <= rel_tol;
    return st;
}

/// BiCGStab for general (possibly nonsymmetric) operators.
template <class Apply>
SolveStats bicgstab(Apply&& apply, const std::vector<double>& b, std::vector<double>& x,
                    double rel_tol, long max_iter) {
    const std::size_t n = b.size();
    SolveStats st;
    const double bnorm = detail::norm(b);
    if (bnorm == 0.0) {
        x.assign(n, 0.0);
        st.converged = true;
        return st;
    }

    std::vector<double> r(n), rhat(n), p(n, 0.0), v(n, 0.0), s(n), t(n);
    if (x.size() != n) x.assign(n, 0.0);
    apply(x, t);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - t[i];
    rhat = r;

    double rho = 1.0, alpha = 1.0, omega = 1.0;
    for (long it = 0; it < max_iter; ++it) {
        const double rho1 = detail::dot(rhat, r);
        if (rho1 == 0.0) break;
        if (it == 0) {
            p = r;
        } else {
            const double beta = (rho1 / rho) * (alpha / omega);
            for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        rho = rho1;
        apply(p, v);
        const double rhv = detail::dot(rhat, v);
        if (rhv == 0.0) break;
        alpha = rho / rhv;
        for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        st.residual = detail::norm(s) / bnorm;
        if (st.residual <= rel_tol) {
            for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
            st.iterations = it + 1;
            st.converged = true;
            return st;
        }
        apply(s, t);
        const double tt = detail::dot(t, t);
        if (tt == 0.0) break;
        omega = detail::dot(t, s) / tt;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        st.iterations = it + 1;
        st.residual = detail::norm(r) / bnorm;
        if (st.residual <= rel_tol) {
            st.converged = true;
            return st;
        }
        if (!std::isfinite(st.residual) || omega == 0.0) break;
    }
    std::vector<double> tmp(n);
    apply(x, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = b[i] - tmp[i];
    st.residual = detail::norm(tmp) / bnorm;
    st.converged = st.residual <= rel_tol;
    return st;
}

/// Geometric multigrid V(2,2) cycle for -Laplace on fully periodic
/// cell-centered grids. Used as a CG preconditioner; handles the constant
/// nullspace by mean subtraction.
class PeriodicPoissonMG {
public:
    PeriodicPoissonMG(int nx, int ny, double dx, double dy) {
        int cx = nx, cy = ny;
        double hx = dx, hy = dy;
        levels_.push_back({cx, cy, hx, hy});
        while (cx % 2 == 0 && cy % 2 == 0 && cx > 8 && cy > 8) {
            cx /= 2;
            cy /= 2;
            hx *= 2.0;
            hy *= 2.0;
            levels_.push_back({cx, cy, hx, hy});
        }
    }

    static bool suitable(int nx, int ny) { return nx % 2 == 0 && ny % 2 == 0 && nx > 8 && ny > 8; }

    /// z ~= (-Laplace)^-1 r, one V-cycle, zero-mean output.
    void apply(const std::vector<double>& r, std::vector<double>& z) const {
        z.assign(r.size(), 0.0);
        vcycle(0, r, z);
        double mean = 0.0;
        for (const double v : z) mean += v;
        mean /= static_cast<double>(z.size());
        for (double& v : z) v -= mean;
    }

private:
    struct Level {
        int nx, ny;
        double dx, dy;
    };

    std::size_t idx(const Level& L, int i, int j) const {
        return static_cast<std::size_t>(j) * L.nx + i;
    }

    void op(const Level& L, const std::vector<double>& x, std::vector<double>& y) const {
        const double ax = 1.0 / (L.dx * L.dx), ay = 1.0 / (L.dy * L.dy);
        const double d = 2.0 * (ax + ay);
        for (int j = 0; j < L.ny; ++j) {
            const int jm = (j - 1 + L.ny) % L.ny, jp = (j + 1) % L.ny;
            for (int i = 0; i < L.nx; ++i) {
                const int im = (i - 1 + L.nx) % L.nx, ip = (i + 1) % L.nx;
                y[idx(L, i, j)] = d * x[idx(L, i, j)] - ax * (x[idx(L, im, j)] + x[idx(L, ip, j)]) -
                                  ay * (x[idx(L, i, jm)] + x[idx(L, i, jp)]);
            }
        }
    }

    void smooth(const Level& L, const std::vector<double>& b, std::vector<double>& x,
                int sweeps) const {
        const double ax = 1.0 / (L.dx * L.dx), ay = 1.0 / (L.dy * L.dy);
        const double d = 2.0 * (ax + ay);
        const double w = 0.8 / d;
        std::vector<double> ax_buf(x.size());
        for (int s = 0; s < sweeps; ++s) {
            op(L, x, ax_buf);
            for (std::size_t k = 0; k < x.size(); ++k) x[k] += w * (b[k] - ax_buf[k]);
        }
    }

    void vcycle(std::size_t lev, const std::vector<double>& b, std::vector<double>& x) const {
        const Level& L = levels_[lev];
        if (lev + 1 == levels_.size()) {
            // coarsest level: fixed smoothing keeps the preconditioner linear
            // and symmetric, which plain CG requires
            smooth(L, b, x, 60);
            return;
        }
        smooth(L, b, x, 2);

        // residual, restrict (transpose of bilinear prolongation, scaled)
        std::vector<double> res(b.size());
        op(L, x, res);
        for (std::size_t k = 0; k < res.size(); ++k) res[k] = b[k] - res[k];

        const Level& C = levels_[lev + 1];
        std::vector<double> rc(static_cast<std::size_t>(C.nx) * C.ny, 0.0);
        scatter_restrict(L, C, res, rc);

        std::vector<double> xc(rc.size(), 0.0);
        vcycle(lev + 1, rc, xc);

        prolong_add(L, C, xc, x);
        smooth(L, b, x, 2);
    }

    void scatter_restrict(const Level& F, const Level& C, const std::vector<double>& rf,
                          std::vector<double>& rc) const {
        for (int j = 0; j < F.ny; ++j) {
            const int J = j / 2;
            const int Jn = (j % 2 == 0) ? (J - 1 + C.ny) % C.ny : (J + 1) % C.ny;
            for (int i = 0; i < F.nx; ++i) {
                const int I = i / 2;
                const int In = (i % 2 == 0) ? (I - 1 + C.nx) % C.nx : (I + 1) % C.nx;
                const double v = 0.25 * rf[idx(F, i, j)];
                rc[idx(C, I, J)] += v * (9.0 / 16.0);
                rc[idx(C, In, J)] += v * (3.0 / 16.0);
                rc[idx(C, I, Jn)] += v * (3.0 / 16.0);
                rc[idx(C, In, Jn)] += v * (1.0 / 16.0);
            }
        }
    }

    void prolong_add(const Level& F, const Level& C, const std::vector<double>& xc,
                     std::vector<double>& xf) const {
        for (int j = 0; j < F.ny; ++j) {
            const int J = j / 2;
            const int Jn = (j % 2 == 0) ? (J - 1 + C.ny) % C.ny : (J + 1) % C.ny;
            for (int i = 0; i < F.nx; ++i) {
                const int I = i / 2;
                const int In = (i % 2 == 0) ? (I - 1 + C.nx) % C.nx : (I + 1) % C.nx;
                xf[idx(F, i, j)] += (9.0 / 16.0) * xc[idx(C, I, J)] +
                                    (3.0 / 16.0) * xc[idx(C, In, J)] +
                                    (3.0 / 16.0) * xc[idx(C, I, Jn)] +
                                    (1.0 / 16.0) * xc[idx(C, In, Jn)];
            }
        }
    }

    std::vector<Level> levels_;
};

}  // namespace efr
