#pragma once

/// Bounded minimization of the per-instant objective: projected quasi-Newton
/// with finite-difference gradients and backtracking line search, plus an
/// exhaustive lattice oracle used for verification.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "efr/errors.hpp"

namespace efr {

struct Bounds {
    std::vector<std::array<double, 2>> box;  // {lo, hi} per parameter

    Bounds() = default;
    explicit Bounds(std::vector<std::array<double, 2>> b) : box(std::move(b)) { validate(); }
    static Bounds interval(double lo, double hi) { return Bounds({{lo, hi}}); }
    static Bounds rect(double lo0, double hi0, double lo1, double hi1) {
        return Bounds({{lo0, hi0}, {lo1, hi1}});
    }

    std::size_t dim() const { return box.size(); }

    void validate() const {
        if (box.empty()) throw InvalidSpec("bounds: empty");
        for (const auto& [lo, hi] : box) {
            if (!std::isfinite(lo) || !std::isfinite(hi))
                throw InvalidSpec("bounds: endpoints must be finite");
            if (lo > hi) throw InvalidSpec("bounds: lower endpoint exceeds upper");
        }
    }

    bool contains(std::span<const double> x, double slack = 0.0) const {
        for (std::size_t d = 0; d < box.size(); ++d)
            if (x[d] < box[d][0] - slack || x[d] > box[d][1] + slack) return false;
        return true;
    }

    std::vector<double> clamp(std::span<const double> x) const {
        std::vector<double> out(x.begin(), x.end());
        for (std::size_t d = 0; d < box.size(); ++d)
            out[d] = std::min(std::max(out[d], box[d][0]), box[d][1]);
        return out;
    }
};

struct OptOptions {
    int max_iter = 25;
    double tol = 1e-8;
};

struct OptResult {
    std::vector<double> x;
    double value = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    bool converged = false;
    long evaluations = 0;
    bool x0_clamped = false;
};

using BoundedObjective = std::function<double(std::span<const double>)>;

inline bool optimization_schedule(long step_index, long k) {
    if (k < 1) throw InvalidSpec("schedule: cadence multiplier must be at least 1");
    return step_index % k == 0;
}

namespace detail {

/// Lexicographic tie-break: prefer the smaller parameter vector.
inline bool lex_less(const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t d = 0; d < a.size(); ++d) {
        if (a[d] < b[d]) return true;
        if (a[d] > b[d]) return false;
    }
    return false;
}

}  // namespace detail

inline OptResult minimize_bounded(const BoundedObjective& f, const Bounds& bounds,
                                  std::vector<double> x0, OptOptions opts = {}) {
    bounds.validate();
    const std::size_t n = bounds.dim();
    if (x0.size() != n) throw InvalidSpec("minimize_bounded: x0 dimension mismatch");

    OptResult res;
    {
        const std::vector<double> clamped = bounds.clamp(x0);
        res.x0_clamped = clamped != x0;
        x0 = clamped;
    }

    // work in per-dimension normalized coordinates
    std::vector<double> lo(n), width(n);
    for (std::size_t d = 0; d < n; ++d) {
        lo[d] = bounds.box[d][0];
        width[d] = bounds.box[d][1] - bounds.box[d][0];
    }
    auto denorm = [&](const std::vector<double>& y) {
        std::vector<double> x(n);
        for (std::size_t d = 0; d < n; ++d) x[d] = lo[d] + width[d] * y[d];
        return bounds.clamp(x);
    };

    long evals = 0;
    bool nan_seen = false;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> best_x;
    auto eval = [&](const std::vector<double>& y) {
        const std::vector<double> x = denorm(y);
        const double v = f(x);
        ++evals;
        if (std::isnan(v)) {
            nan_seen = true;
            return std::numeric_limits<double>::infinity();
        }
        if (v < best_val || (v == best_val && (best_x.empty() || detail::lex_less(x, best_x)))) {
            best_val = v;
            best_x = x;
        }
        return v;
    };

    std::vector<double> y(n);
    for (std::size_t d = 0; d < n; ++d) y[d] = width[d] > 0.0 ? (x0[d] - lo[d]) / width[d] : 0.0;

    auto clamp01 = [&](std::vector<double> z) {
        for (std::size_t d = 0; d < n; ++d) {
            if (width[d] <= 0.0) z[d] = 0.0;
            z[d] = std::min(std::max(z[d], 0.0), 1.0);
        }
        return z;
    };

    const double h = 1e-6;  // relative to the bound width
    auto fd_grad = [&](const std::vector<double>& yc, double fc) {
        std::vector<double> grad(n, 0.0);
        for (std::size_t d = 0; d < n; ++d) {
            if (width[d] <= 0.0) continue;
            std::vector<double> yp = yc, ym = yc;
            yp[d] = std::min(yc[d] + h, 1.0);
            ym[d] = std::max(yc[d] - h, 0.0);
            if (yp[d] == ym[d]) continue;
            double fp = yp[d] == yc[d] ? fc : eval(yp);
            double fm = ym[d] == yc[d] ? fc : eval(ym);
            grad[d] = (fp - fm) / (yp[d] - ym[d]);
        }
        return grad;
    };

    double fc = eval(y);
    if (nan_seen) {
        res.x = best_x.empty() ? x0 : best_x;
        res.value = best_x.empty() ? std::numeric_limits<double>::quiet_NaN() : best_val;
        res.evaluations = evals;
        return res;
    }

    // inverse-Hessian approximation, identity start (n <= 2 in practice)
    std::vector<std::vector<double>> H(n, std::vector<double>(n, 0.0));
    for (std::size_t d = 0; d < n; ++d) H[d][d] = 1.0;

    std::vector<double> g = fd_grad(y, fc);

    for (int it = 0; it < opts.max_iter && !nan_seen; ++it) {
        res.iterations = it + 1;

        std::vector<double> dir(n, 0.0);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) dir[r] -= H[r][c] * g[c];

        auto line_search = [&](const std::vector<double>& d,
                               std::vector<double>& y_out) -> double {
            double alpha = 1.0;
            for (int bt = 0; bt < 40; ++bt) {
                std::vector<double> cand(n);
                for (std::size_t k = 0; k < n; ++k) cand[k] = y[k] + alpha * d[k];
                cand = clamp01(std::move(cand));
                if (cand == y) {
                    alpha *= 0.5;
                    continue;
                }
                const double fv = eval(cand);
                if (nan_seen) return std::numeric_limits<double>::quiet_NaN();
                if (fv < fc) {
                    y_out = std::move(cand);
                    return fv;
                }
                alpha *= 0.5;
            }
            return std::numeric_limits<double>::quiet_NaN();
        };

        std::vector<double> y_new;
        double f_new = line_search(dir, y_new);
        if (nan_seen) break;
        if (std::isnan(f_new)) {
            // quasi-Newton direction failed, retry along steepest descent
            std::vector<double> sd(n);
            for (std::size_t d = 0; d < n; ++d) sd[d] = -g[d];
            f_new = line_search(sd, y_new);
            if (nan_seen) break;
            if (std::isnan(f_new)) {
                res.converged = true;  // no descent direction left
                break;
            }
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < n; ++c) H[r][c] = r == c ? 1.0 : 0.0;
        }

        std::vector<double> g_new = fd_grad(y_new, f_new);
        if (nan_seen) break;

        // BFGS update of the inverse Hessian
        std::vector<double> s(n), yk(n);
        double sy = 0.0;
        for (std::size_t d = 0; d < n; ++d) {
            s[d] = y_new[d] - y[d];
            yk[d] = g_new[d] - g[d];
            sy += s[d] * yk[d];
        }
        if (sy > 1e-14) {
            std::vector<double> Hy(n, 0.0);
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < n; ++c) Hy[r] += H[r][c] * yk[c];
            double yHy = 0.0;
            for (std::size_t d = 0; d < n; ++d) yHy += yk[d] * Hy[d];
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < n; ++c)
                    H[r][c] += (sy + yHy) * s[r] * s[c] / (sy * sy) -
                               (Hy[r] * s[c] + s[r] * Hy[c]) / sy;
        } else {
            for (std::size_t r = 0; r < n; ++r)
                for (std::size_t c = 0; c < n; ++c) H[r][c] = r == c ? 1.0 : 0.0;
        }

        double step_inf = 0.0;
        for (std::size_t d = 0; d < n; ++d) step_inf = std::max(step_inf, std::abs(s[d]));
        const double df = std::abs(f_new - fc);

        y = std::move(y_new);
        fc = f_new;
        g = std::move(g_new);

        if (step_inf < opts.tol || df < opts.tol) {
            res.converged = true;
            break;
        }
    }

    if (nan_seen) res.converged = false;
    res.x = best_x.empty() ? x0 : best_x;
    res.value = best_x.empty() ? std::numeric_limits<double>::quiet_NaN() : best_val;
    res.evaluations = evals;
    // hard guarantee: the result never leaves the admissible box
    res.x = bounds.clamp(res.x);
    return res;
}

/// Exhaustive evaluation on a uniform lattice including the endpoints.
/// Ties keep the lowest-index lattice point.
inline OptResult grid_search_oracle(const BoundedObjective& f, const Bounds& bounds,
                                    int n_per_dim) {
    bounds.validate();
    if (n_per_dim < 2) throw InvalidSpec("grid_search_oracle: need at least 2 points per dim");
    const std::size_t n = bounds.dim();
    if (n > 2) throw InvalidSpec("grid_search_oracle: supports 1 or 2 dimensions");

    auto coord = [&](std::size_t d, int k) {
        return bounds.box[d][0] +
               (bounds.box[d][1] - bounds.box[d][0]) * static_cast<double>(k) / (n_per_dim - 1);
    };

    OptResult res;
    res.value = std::numeric_limits<double>::infinity();
    res.converged = true;
    std::vector<double> x(n);
    const int inner = n == 2 ? n_per_dim : 1;
    for (int k0 = 0; k0 < n_per_dim; ++k0) {
        x[0] = coord(0, k0);
        for (int k1 = 0; k1 < inner; ++k1) {
            if (n == 2) x[1] = coord(1, k1);
            const double v = f(x);
            ++res.evaluations;
            if (std::isfinite(v) && v < res.value) {
                res.value = v;
                res.x = x;
            }
        }
    }
    if (res.x.empty()) {
        res.x = bounds.clamp(std::vector<double>(n, 0.0));
        res.value = std::numeric_limits<double>::quiet_NaN();
        res.converged = false;
    }
    return res;
}

}  // namespace efr
