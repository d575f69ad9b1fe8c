#pragma once

/// Staggered (MAC) rectangular grids: channel-with-cylinder benchmark
/// geometry and periodic boxes, with cell masks, boundary tags, dof counts,
/// and grid-to-grid restriction of staggered fields.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "efr/errors.hpp"

namespace efr {

enum class GeometryKind : std::uint8_t { channel_cylinder, periodic_box };

enum class CellKind : std::uint8_t { fluid, solid };

enum class BoundaryTag : std::uint8_t { inlet, wall, outflow, periodic };

struct GeometrySpec {
    GeometryKind kind = GeometryKind::channel_cylinder;

    // channel_cylinder: [0,length] x [0,height] with a circular obstacle
    double length = 2.2;
    double height = 0.41;
    double cyl_x = 0.2;
    double cyl_y = 0.2;
    double cyl_r = 0.05;

    // periodic_box: [0,box_lx] x [0,box_ly], no obstacle
    double box_lx = 1.0;
    double box_ly = 1.0;

    static GeometrySpec channel() { return GeometrySpec{}; }

    static GeometrySpec box(double lx, double ly) {
        GeometrySpec s;
        s.kind = GeometryKind::periodic_box;
        s.box_lx = lx;
        s.box_ly = ly;
        return s;
    }

    double extent_x() const { return kind == GeometryKind::periodic_box ? box_lx : length; }
    double extent_y() const { return kind == GeometryKind::periodic_box ? box_ly : height; }

    void validate() const {
        if (extent_x() <= 0.0 || extent_y() <= 0.0)
            throw InvalidSpec("geometry: domain extent must be positive");
        if (kind == GeometryKind::channel_cylinder) {
            if (cyl_r < 0.0) throw InvalidSpec("geometry: cylinder radius must be nonnegative");
            // radius zero means an open channel without obstacle
            if (cyl_r > 0.0 && (cyl_x - cyl_r <= 0.0 || cyl_x + cyl_r >= length ||
                                cyl_y - cyl_r <= 0.0 || cyl_y + cyl_r >= height))
                throw InvalidSpec("geometry: cylinder must lie strictly inside the channel");
        }
    }
};

struct DofCounts {
    std::size_t velocity = 0;
    std::size_t pressure = 0;
};

/// How a staggered face enters the discrete system.
enum class FaceRole : std::uint8_t {
    unknown,   ///< solved for
    dirichlet, ///< prescribed value (inlet, wall, solid interface/interior)
    mirror     ///< copies the adjacent interior unknown (outflow, zero normal gradient)
};

/// Uniform MAC grid. Pressure lives at cell centers, u at x-normal faces,
/// v at y-normal faces. Immutable after construction.
class Grid {
public:
    Grid(const GeometrySpec& spec, int nx, int ny) : spec_(spec), nx_(nx), ny_(ny) {
        spec.validate();
        if (nx < 4 || ny < 4) throw InvalidSpec("grid: nx and ny must be at least 4");
        lx_ = spec.extent_x();
        ly_ = spec.extent_y();
        dx_ = lx_ / nx;
        dy_ = ly_ / ny;
        periodic_ = spec.kind == GeometryKind::periodic_box;

        cells_.assign(static_cast<std::size_t>(nx_) * ny_, CellKind::fluid);
        if (spec.kind == GeometryKind::channel_cylinder && spec.cyl_r > 0.0) {
            const double r2 = spec.cyl_r * spec.cyl_r;
            for (int j = 0; j < ny_; ++j) {
                for (int i = 0; i < nx_; ++i) {
                    const double cx = (i + 0.5) * dx_ - spec.cyl_x;
                    const double cy = (j + 0.5) * dy_ - spec.cyl_y;
                    // center strictly inside the circle; on-circle ties stay fluid
                    if (cx * cx + cy * cy < r2) cells_[cell(i, j)] = CellKind::solid;
                }
            }
        }
        classify_faces();
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double dx() const { return dx_; }
    double dy() const { return dy_; }
    double lx() const { return lx_; }
    double ly() const { return ly_; }
    double cell_area() const { return dx_ * dy_; }
    bool periodic() const { return periodic_; }
    const GeometrySpec& spec() const { return spec_; }
    const DofCounts& dofs() const { return dofs_; }

    std::size_t cell(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }
    bool fluid(int i, int j) const { return cells_[cell(i, j)] == CellKind::fluid; }
    CellKind cell_kind(int i, int j) const { return cells_[cell(i, j)]; }
    std::size_t cell_count() const { return cells_.size(); }
    std::size_t fluid_cell_count() const { return fluid_cells_; }
    std::size_t solid_cell_count() const { return cells_.size() - fluid_cells_; }

    // Staggered array shapes. Periodic grids store one value per unique face.
    int unx() const { return periodic_ ? nx_ : nx_ + 1; }
    int uny() const { return ny_; }
    int vnx() const { return nx_; }
    int vny() const { return periodic_ ? ny_ : ny_ + 1; }
    std::size_t u_size() const { return static_cast<std::size_t>(unx()) * uny(); }
    std::size_t v_size() const { return static_cast<std::size_t>(vnx()) * vny(); }

    std::size_t uidx(int i, int j) const { return static_cast<std::size_t>(j) * unx() + i; }
    std::size_t vidx(int i, int j) const { return static_cast<std::size_t>(j) * vnx() + i; }

    FaceRole u_role(int i, int j) const { return u_roles_[uidx(i, j)]; }
    FaceRole v_role(int i, int j) const { return v_roles_[vidx(i, j)]; }
    bool u_unknown(int i, int j) const { return u_role(i, j) == FaceRole::unknown; }
    bool v_unknown(int i, int j) const { return v_role(i, j) == FaceRole::unknown; }

    double u_x(int i) const { return i * dx_; }
    double u_y(int j) const { return (j + 0.5) * dy_; }
    double v_x(int i) const { return (i + 0.5) * dx_; }
    double v_y(int j) const { return j * dy_; }
    double cell_x(int i) const { return (i + 0.5) * dx_; }
    double cell_y(int j) const { return (j + 0.5) * dy_; }

    /// A boundary face of the discretized domain, with its condition tag.
    struct BoundaryFace {
        char component;  // 'u' or 'v'
        int i, j;
        BoundaryTag tag;
    };

    /// Domain-boundary faces plus fluid/solid interface faces.
    std::vector<BoundaryFace> boundary_faces() const {
        std::vector<BoundaryFace> out;
        if (periodic_) return out;
        for (int j = 0; j < ny_; ++j) {
            if (fluid(0, j)) out.push_back({'u', 0, j, BoundaryTag::inlet});
            if (fluid(nx_ - 1, j)) out.push_back({'u', nx_, j, BoundaryTag::outflow});
        }
        for (int i = 0; i < nx_; ++i) {
            if (fluid(i, 0)) out.push_back({'v', i, 0, BoundaryTag::wall});
            if (fluid(i, ny_ - 1)) out.push_back({'v', i, ny_, BoundaryTag::wall});
        }
        // stair-step obstacle: faces separating a fluid cell from a solid cell
        for (int j = 0; j < ny_; ++j)
            for (int i = 1; i < nx_; ++i)
                if (fluid(i - 1, j) != fluid(i, j)) out.push_back({'u', i, j, BoundaryTag::wall});
        for (int j = 1; j < ny_; ++j)
            for (int i = 0; i < nx_; ++i)
                if (fluid(i, j - 1) != fluid(i, j)) out.push_back({'v', i, j, BoundaryTag::wall});
        return out;
    }

    bool same_extent(const Grid& other, double tol = 1e-12) const {
        return spec_.kind == other.spec_.kind && std::abs(lx_ - other.lx_) < tol &&
               std::abs(ly_ - other.ly_) < tol;
    }

private:
    void classify_faces() {
        u_roles_.assign(u_size(), FaceRole::dirichlet);
        v_roles_.assign(v_size(), FaceRole::dirichlet);
        fluid_cells_ = 0;
        for (const auto k : cells_)
            if (k == CellKind::fluid) ++fluid_cells_;

        if (periodic_) {
            // all cells fluid, every stored face is an unknown
            u_roles_.assign(u_size(), FaceRole::unknown);
            v_roles_.assign(v_size(), FaceRole::unknown);
        } else {
            for (int j = 0; j < ny_; ++j) {
                for (int i = 0; i <= nx_; ++i) {
                    FaceRole r = FaceRole::dirichlet;
                    if (i == nx_) {
                        r = fluid(nx_ - 1, j) ? FaceRole::mirror : FaceRole::dirichlet;
                    } else if (i > 0 && fluid(i - 1, j) && fluid(i, j)) {
                        r = FaceRole::unknown;
                    }
                    u_roles_[uidx(i, j)] = r;
                }
            }
            for (int j = 0; j <= ny_; ++j) {
                for (int i = 0; i < nx_; ++i) {
                    FaceRole r = FaceRole::dirichlet;
                    if (j > 0 && j < ny_ && fluid(i, j - 1) && fluid(i, j)) r = FaceRole::unknown;
                    v_roles_[vidx(i, j)] = r;
                }
            }
        }

        dofs_.pressure = fluid_cells_;
        dofs_.velocity = 0;
        for (const auto r : u_roles_)
            if (r == FaceRole::unknown) ++dofs_.velocity;
        for (const auto r : v_roles_)
            if (r == FaceRole::unknown) ++dofs_.velocity;
    }

    GeometrySpec spec_;
    int nx_, ny_;
    double dx_, dy_, lx_, ly_;
    bool periodic_ = false;
    std::vector<CellKind> cells_;
    std::vector<FaceRole> u_roles_, v_roles_;
    std::size_t fluid_cells_ = 0;
    DofCounts dofs_;
};

inline Grid build_grid(const GeometrySpec& spec, int nx, int ny) { return Grid(spec, nx, ny); }

}  // namespace efr
