#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include "hdgns/spaces.hpp"
#include "hdgns/state.hpp"

namespace hdgns {

/// Root-mean-square Frobenius norm of L_h over cell c.
inline double cell_gradient_magnitude(const HDGState& st, Index c) {
    const SpaceSet& s = *st.spaces;
    const auto& d = s.cell_linear(c);
    const std::size_t nk = s.modes_k();
    const Eigen::Map<const Vector> w(d.rule.weights.data(), d.rule.size());
    const Matrix Lh = d.phi.leftCols(nk) * st.L(c).reshaped(nk, 4);
    return std::sqrt(w.dot(Lh.rowwise().squaredNorm()) / s.mesh().cell_area(c));
}

/// Legacy ASCII VTK unstructured grid. Each cell is fanned into triangles around
/// its centroid; points are duplicated per cell so the discontinuous fields show.
inline void write_vtk(std::ostream& os, const HDGState& st) {
    const SpaceSet& s = *st.spaces;
    const PolyMesh& mesh = s.mesh();
    std::size_t npts = 0, ntri = 0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        npts += mesh.cell_vertices(c).size() + 1;
        ntri += mesh.cell_vertices(c).size();
    }
    os << std::setprecision(10);
    os << "# vtk DataFile Version 3.0\nhdgns solution\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << npts << " double\n";
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        for (Index v : mesh.cell_vertices(c)) os << mesh.vertex(v).x() << ' ' << mesh.vertex(v).y() << " 0\n";
        os << mesh.cell_centroid(c).x() << ' ' << mesh.cell_centroid(c).y() << " 0\n";
    }
    os << "CELLS " << ntri << ' ' << 4 * ntri << '\n';
    std::size_t base = 0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const std::size_t m = mesh.cell_vertices(c).size();
        for (std::size_t i = 0; i < m; ++i) os << "3 " << base + i << ' ' << base + (i + 1) % m << ' ' << base + m << '\n';
        base += m + 1;
    }
    os << "CELL_TYPES " << ntri << '\n';
    for (std::size_t i = 0; i < ntri; ++i) os << "5\n";

    std::ostringstream vel, pres;
    vel << std::setprecision(10);
    pres << std::setprecision(10);
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        auto emit = [&](const Vec2& x) {
            const Vec2 u = eval_velocity(s, c, st.u(c), x);
            vel << u.x() << ' ' << u.y() << " 0\n";
            pres << eval_scalar(s, c, st.p(c), x) << '\n';
        };
        for (Index v : mesh.cell_vertices(c)) emit(mesh.vertex(v));
        emit(mesh.cell_centroid(c));
    }
    os << "POINT_DATA " << npts << '\n';
    os << "VECTORS velocity double\n" << vel.str();
    os << "SCALARS pressure double 1\nLOOKUP_TABLE default\n" << pres.str();
    os << "CELL_DATA " << ntri << '\n';
    os << "SCALARS grad_velocity_norm double 1\nLOOKUP_TABLE default\n";
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const double g = cell_gradient_magnitude(st, c);
        for (std::size_t i = 0; i < mesh.cell_vertices(c).size(); ++i) os << g << '\n';
    }
}

inline void export_vtk(const HDGState& st, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw MeshError(MeshError::Kind::io, "cannot open " + path + " for writing");
    write_vtk(out, st);
    if (!out) throw MeshError(MeshError::Kind::io, "write failed: " + path);
}

}  // namespace hdgns
