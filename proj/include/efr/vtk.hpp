#pragma once

/// Legacy-VTK structured-points export of a snapshot: cell-centered
/// velocity, pressure, and the fluid/solid mask.

#include <cstdio>
#include <fstream>
#include <string>

#include "efr/errors.hpp"
#include "efr/field.hpp"
#include "efr/grid.hpp"

namespace efr {

inline void export_vtk(const std::string& path, const State& s, const Grid& g) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");

    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.9g", v);
        return std::string(buf);
    };

    out << "# vtk DataFile Version 3.0\n";
    out << "efrlab snapshot t=" << num(s.time) << "\n";
    out << "ASCII\n";
    out << "DATASET STRUCTURED_POINTS\n";
    out << "DIMENSIONS " << g.nx() + 1 << " " << g.ny() + 1 << " 1\n";
    out << "ORIGIN 0 0 0\n";
    out << "SPACING " << num(g.dx()) << " " << num(g.dy()) << " 1\n";
    out << "CELL_DATA " << g.nx() * g.ny() << "\n";

    out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) out << num(s.pressure(i, j)) << "\n";

    out << "SCALARS mask int 1\nLOOKUP_TABLE default\n";
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) out << (g.fluid(i, j) ? 1 : 0) << "\n";

    out << "VECTORS velocity double\n";
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const double uc = 0.5 * (s.velocity.u(i, j) + s.velocity.u(i + 1, j));
            const double vc = 0.5 * (s.velocity.v(i, j) + s.velocity.v(i, j + 1));
            out << num(uc) << " " << num(vc) << " 0\n";
        }
    if (!out) throw IoError("short write to " + path);
}

}  // namespace efr
