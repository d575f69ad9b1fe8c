#pragma once

/// Field storage on MAC grids (cell-centered scalars, face-centered velocity
/// components) and the conservative restriction between nested grids.

#include <cmath>
#include <vector>

#include "efr/errors.hpp"
#include "efr/grid.hpp"

namespace efr {

/// Cell-centered scalar field. Entries on solid cells are kept at zero.
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(const Grid& g) : grid_(&g), data_(g.cell_count(), 0.0) {}

    const Grid& grid() const { return *grid_; }
    double& operator()(int i, int j) { return data_[grid_->cell(i, j)]; }
    double operator()(int i, int j) const { return data_[grid_->cell(i, j)]; }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

private:
    const Grid* grid_ = nullptr;
    std::vector<double> data_;
};

/// Staggered velocity field: u on x-normal faces, v on y-normal faces.
/// Periodic grids store one value per unique face; accessors wrap.
class VectorField {
public:
    VectorField() = default;
    explicit VectorField(const Grid& g)
        : grid_(&g), u_(g.u_size(), 0.0), v_(g.v_size(), 0.0) {}

    const Grid& grid() const { return *grid_; }

    double& u(int i, int j) { return u_[grid_->uidx(wrap_ui(i), wrap_j(j))]; }
    double u(int i, int j) const { return u_[grid_->uidx(wrap_ui(i), wrap_j(j))]; }
    double& v(int i, int j) { return v_[grid_->vidx(wrap_i(i), wrap_vj(j))]; }
    double v(int i, int j) const { return v_[grid_->vidx(wrap_i(i), wrap_vj(j))]; }

    std::vector<double>& u_data() { return u_; }
    const std::vector<double>& u_data() const { return u_; }
    std::vector<double>& v_data() { return v_; }
    const std::vector<double>& v_data() const { return v_; }

private:
    int wrap_ui(int i) const {
        if (!grid_->periodic()) return i;
        const int n = grid_->nx();
        return (i % n + n) % n;
    }
    int wrap_vj(int j) const {
        if (!grid_->periodic()) return j;
        const int n = grid_->ny();
        return (j % n + n) % n;
    }
    int wrap_i(int i) const {
        if (!grid_->periodic()) return i;
        const int n = grid_->nx();
        return (i % n + n) % n;
    }
    int wrap_j(int j) const {
        if (!grid_->periodic()) return j;
        const int n = grid_->ny();
        return (j % n + n) % n;
    }

    const Grid* grid_ = nullptr;
    std::vector<double> u_, v_;
};

/// Velocity and pressure at one time instant.
struct State {
    VectorField velocity;
    ScalarField pressure;
    double time = 0.0;

    State() = default;
    explicit State(const Grid& g) : velocity(g), pressure(g) {}
};

namespace detail {

// One factor-2 coarsening step along the face-normal axis: centered
// (1/4, 1/2, 1/4) kernel across planes. Conserves the plane-weighted sum,
// reproduces linear profiles, and keeps power-of-two restrictions nested.
// Buffer layout: value(plane, row) = buf[row * n_planes + plane].
inline std::vector<double> halve_planes(const std::vector<double>& buf, int n_planes, int n_rows,
                                        bool periodic) {
    const int nc = periodic ? n_planes / 2 : (n_planes - 1) / 2 + 1;
    std::vector<double> out(static_cast<std::size_t>(nc) * n_rows);
    for (int r = 0; r < n_rows; ++r) {
        const double* src = buf.data() + static_cast<std::size_t>(r) * n_planes;
        double* dst = out.data() + static_cast<std::size_t>(r) * nc;
        for (int ic = 0; ic < nc; ++ic) {
            const int i = 2 * ic;
            if (periodic) {
                const int im = (i - 1 + n_planes) % n_planes;
                const int ip = (i + 1) % n_planes;
                dst[ic] = 0.25 * src[im] + 0.5 * src[i] + 0.25 * src[ip];
            } else if (i == 0 || i == n_planes - 1) {
                dst[ic] = src[i];  // domain-boundary plane, Dirichlet-valued
            } else {
                dst[ic] = 0.25 * src[i - 1] + 0.5 * src[i] + 0.25 * src[i + 1];
            }
        }
    }
    return out;
}

// Centered odd-width block average across planes.
inline std::vector<double> block_planes(const std::vector<double>& buf, int n_planes, int n_rows,
                                        int ratio, bool periodic) {
    const int nc = periodic ? n_planes / ratio : (n_planes - 1) / ratio + 1;
    const int half = (ratio - 1) / 2;
    std::vector<double> out(static_cast<std::size_t>(nc) * n_rows);
    for (int r = 0; r < n_rows; ++r) {
        const double* src = buf.data() + static_cast<std::size_t>(r) * n_planes;
        double* dst = out.data() + static_cast<std::size_t>(r) * nc;
        for (int ic = 0; ic < nc; ++ic) {
            const int i = ratio * ic;
            if (!periodic && (i == 0 || i == n_planes - 1)) {
                dst[ic] = src[i];
                continue;
            }
            double s = 0.0;
            for (int o = -half; o <= half; ++o) {
                int k = i + o;
                if (periodic) k = (k % n_planes + n_planes) % n_planes;
                s += src[k];
            }
            dst[ic] = s / ratio;
        }
    }
    return out;
}

inline std::vector<double> restrict_planes(std::vector<double> buf, int n_planes, int n_rows,
                                           int ratio, bool periodic) {
    while (ratio % 2 == 0) {
        buf = halve_planes(buf, n_planes, n_rows, periodic);
        n_planes = periodic ? n_planes / 2 : (n_planes - 1) / 2 + 1;
        ratio /= 2;
    }
    if (ratio > 1) buf = block_planes(buf, n_planes, n_rows, ratio, periodic);
    return buf;
}

inline int restriction_ratio(int fine, int coarse, const char* axis) {
    if (coarse <= 0 || fine % coarse != 0)
        throw IncompatibleGrids(std::string("restriction: fine ") + axis +
                                " resolution is not an integer multiple of coarse");
    return fine / coarse;
}

}  // namespace detail

/// Conservative area-weighted restriction of a cell-centered field.
inline ScalarField restrict_field(const ScalarField& fine_field, const Grid& fine,
                                  const Grid& coarse) {
    if (!fine.same_extent(coarse))
        throw IncompatibleGrids("restriction: grids differ in extent or geometry kind");
    const int rx = detail::restriction_ratio(fine.nx(), coarse.nx(), "x");
    const int ry = detail::restriction_ratio(fine.ny(), coarse.ny(), "y");
    ScalarField out(coarse);
    for (int jc = 0; jc < coarse.ny(); ++jc) {
        for (int ic = 0; ic < coarse.nx(); ++ic) {
            double s = 0.0;
            for (int oj = 0; oj < ry; ++oj)
                for (int oi = 0; oi < rx; ++oi) s += fine_field(ic * rx + oi, jc * ry + oj);
            out(ic, jc) = coarse.fluid(ic, jc) ? s / (rx * ry) : 0.0;
        }
    }
    return out;
}

/// Conservative restriction of a staggered velocity field: plain block
/// averaging tangential to each face, centered kernel averaging across the
/// face-normal planes.
inline VectorField restrict_field(const VectorField& fine_field, const Grid& fine,
                                  const Grid& coarse) {
    if (!fine.same_extent(coarse))
        throw IncompatibleGrids("restriction: grids differ in extent or geometry kind");
    const int rx = detail::restriction_ratio(fine.nx(), coarse.nx(), "x");
    const int ry = detail::restriction_ratio(fine.ny(), coarse.ny(), "y");
    const bool per = fine.periodic();
    VectorField out(coarse);

    // u: tangential (y) block average at fine planes, then coarsen planes in x
    {
        const int npl = fine.unx();
        std::vector<double> buf(static_cast<std::size_t>(npl) * coarse.ny());
        for (int jc = 0; jc < coarse.ny(); ++jc) {
            for (int i = 0; i < npl; ++i) {
                double s = 0.0;
                for (int o = 0; o < ry; ++o) s += fine_field.u(i, jc * ry + o);
                buf[static_cast<std::size_t>(jc) * npl + i] = s / ry;
            }
        }
        buf = detail::restrict_planes(std::move(buf), npl, coarse.ny(), rx, per);
        for (int jc = 0; jc < coarse.ny(); ++jc)
            for (int ic = 0; ic < coarse.unx(); ++ic)
                out.u(ic, jc) = buf[static_cast<std::size_t>(jc) * coarse.unx() + ic];
    }
    // v: tangential (x) block average, then coarsen planes in y
    {
        const int npl = fine.vny();
        std::vector<double> buf(static_cast<std::size_t>(npl) * coarse.nx());
        for (int ic = 0; ic < coarse.nx(); ++ic) {
            for (int j = 0; j < npl; ++j) {
                double s = 0.0;
                for (int o = 0; o < rx; ++o) s += fine_field.v(ic * rx + o, j);
                buf[static_cast<std::size_t>(ic) * npl + j] = s / rx;
            }
        }
        buf = detail::restrict_planes(std::move(buf), npl, coarse.nx(), ry, per);
        for (int jc = 0; jc < coarse.vny(); ++jc)
            for (int ic = 0; ic < coarse.nx(); ++ic)
                out.v(ic, jc) = buf[static_cast<std::size_t>(ic) * coarse.vny() + jc];
    }
    // zero out faces masked on the coarse grid
    if (!per) {
        for (int j = 0; j < coarse.ny(); ++j)
            for (int i = 0; i <= coarse.nx(); ++i)
                if (i < coarse.nx() && !coarse.fluid(i, j) &&
                    (i == 0 || !coarse.fluid(i - 1, j)))
                    out.u(i, j) = 0.0;
        for (int j = 0; j <= coarse.ny(); ++j)
            for (int i = 0; i < coarse.nx(); ++i)
                if (j > 0 && j < coarse.ny() && !coarse.fluid(i, j) && !coarse.fluid(i, j - 1))
                    out.v(i, j) = 0.0;
    }
    return out;
}

/// Restrict a full state (velocity and pressure) onto a coarser nested grid.
inline State restrict_state(const State& fine_state, const Grid& fine, const Grid& coarse) {
    State out(coarse);
    out.velocity = restrict_field(fine_state.velocity, fine, coarse);
    out.pressure = restrict_field(fine_state.pressure, fine, coarse);
    out.time = fine_state.time;
    return out;
}

}  // namespace efr
