#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hdgns/types.hpp"

namespace hdgns {

/// Axis-aligned rectangle [x0,x1] x [y0,y1].
struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
};

inline constexpr Index boundary_marker = std::numeric_limits<Index>::max();

/// A straight mesh edge. The normal is the outward normal of the left cell;
/// the vertex pair is ordered as the left cell traverses it (counter-clockwise).
struct Face {
    std::array<Index, 2> vertices{};
    Index left = 0;
    Index right = boundary_marker;
    Vec2 normal = Vec2::Zero();
    double length = 0.0;

    bool is_boundary() const { return right == boundary_marker; }
};

/// A face as seen from one of its cells: `sign` is +1 when the stored face
/// normal points out of that cell and -1 otherwise.
struct CellFace {
    Index face = 0;
    double sign = 1.0;
};

/// Conforming polygonal mesh of a polygonal domain. Immutable once built.
class PolyMesh {
public:
    static constexpr int dimension = 2;

    PolyMesh() = default;

    /// Builds faces from counter-clockwise vertex loops and validates the result.
    static PolyMesh from_loops(std::vector<Vec2> vertices, std::vector<std::vector<Index>> loops);

    std::size_t num_vertices() const { return vertices_.size(); }
    std::size_t num_cells() const { return loops_.size(); }
    std::size_t num_faces() const { return faces_.size(); }

    const Vec2& vertex(Index v) const { return vertices_[v]; }
    const std::vector<Vec2>& vertices() const { return vertices_; }
    std::span<const Index> cell_vertices(Index c) const { return loops_[c]; }
    std::span<const CellFace> cell_faces(Index c) const { return cell_faces_[c]; }
    const Face& face(Index f) const { return faces_[f]; }
    const std::vector<Face>& faces() const { return faces_; }

    double cell_diameter(Index c) const { return diameters_[c]; }
    double cell_area(Index c) const { return areas_[c]; }
    const Vec2& cell_centroid(Index c) const { return centroids_[c]; }
    double face_length(Index f) const { return faces_[f].length; }

    /// Outward unit normal of cell `c` on its local face `j`.
    Vec2 outward_normal(Index c, std::size_t j) const {
        const auto& cf = cell_faces_[c][j];
        return cf.sign * faces_[cf.face].normal;
    }

    const std::vector<Index>& boundary_faces() const { return boundary_faces_; }
    const std::vector<Index>& interior_faces() const { return interior_faces_; }

    double max_diameter() const { return *std::max_element(diameters_.begin(), diameters_.end()); }
    double total_area() const {
        double a = 0.0;
        for (double x : areas_) a += x;
        return a;
    }

    /// h_K^2 / |K|; bounded on shape-regular families. Diagnostic only.
    double shape_metric(Index c) const { return diameters_[c] * diameters_[c] / areas_[c]; }

    /// Smallest interior angle of the cell polygon, in radians.
    double min_angle(Index c) const {
        const auto& loop = loops_[c];
        const std::size_t m = loop.size();
        double best = std::numbers::pi;
        for (std::size_t i = 0; i < m; ++i) {
            const Vec2& p = vertices_[loop[i]];
            const Vec2 a = vertices_[loop[(i + m - 1) % m]] - p;
            const Vec2 b = vertices_[loop[(i + 1) % m]] - p;
            double ang = std::atan2(cross(b, a), b.dot(a));
            if (ang < 0) ang += 2.0 * std::numbers::pi;
            best = std::min(best, ang);
        }
        return best;
    }

private:
    void build_faces();
    void compute_geometry();
    void validate() const;

    std::vector<Vec2> vertices_;
    std::vector<std::vector<Index>> loops_;
    std::vector<Face> faces_;
    std::vector<std::vector<CellFace>> cell_faces_;
    std::vector<double> diameters_, areas_;
    std::vector<Vec2> centroids_;
    std::vector<Index> boundary_faces_, interior_faces_;
};

inline PolyMesh PolyMesh::from_loops(std::vector<Vec2> vertices, std::vector<std::vector<Index>> loops) {
    PolyMesh mesh;
    mesh.vertices_ = std::move(vertices);
    mesh.loops_ = std::move(loops);
    if (mesh.loops_.empty()) throw MeshError(MeshError::Kind::topology, "mesh has no cells");
    for (std::size_t c = 0; c < mesh.loops_.size(); ++c) {
        const auto& loop = mesh.loops_[c];
        if (loop.size() < 3)
            throw MeshError(MeshError::Kind::topology, "cell " + std::to_string(c) + " has fewer than 3 vertices");
        for (Index v : loop)
            if (v >= mesh.vertices_.size())
                throw MeshError(MeshError::Kind::topology,
                                "cell " + std::to_string(c) + " references vertex " + std::to_string(v));
    }
    mesh.compute_geometry();
    mesh.build_faces();
    mesh.validate();
    return mesh;
}

inline void PolyMesh::compute_geometry() {
    const std::size_t nc = loops_.size();
    diameters_.assign(nc, 0.0);
    areas_.assign(nc, 0.0);
    centroids_.assign(nc, Vec2::Zero());
    for (std::size_t c = 0; c < nc; ++c) {
        const auto& loop = loops_[c];
        const std::size_t m = loop.size();
        double a2 = 0.0;
        Vec2 cen = Vec2::Zero();
        const Vec2 origin = vertices_[loop[0]];
        for (std::size_t i = 0; i < m; ++i) {
            const Vec2 p = vertices_[loop[i]] - origin;
            const Vec2 q = vertices_[loop[(i + 1) % m]] - origin;
            const double w = cross(p, q);
            a2 += w;
            cen += w * (p + q);
        }
        areas_[c] = 0.5 * a2;
        if (!(areas_[c] > 0.0))
            throw MeshError(MeshError::Kind::topology,
                            "cell " + std::to_string(c) + " is not positively oriented or has zero area");
        centroids_[c] = origin + cen / (3.0 * a2);
        double h = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j)
                h = std::max(h, (vertices_[loop[i]] - vertices_[loop[j]]).norm());
        diameters_[c] = h;
    }
}

inline void PolyMesh::build_faces() {
    std::map<std::pair<Index, Index>, Index> lookup;
    cell_faces_.assign(loops_.size(), {});
    for (std::size_t c = 0; c < loops_.size(); ++c) {
        const auto& loop = loops_[c];
        const std::size_t m = loop.size();
        for (std::size_t i = 0; i < m; ++i) {
            const Index a = loop[i], b = loop[(i + 1) % m];
            if (a == b) throw MeshError(MeshError::Kind::geometry, "cell " + std::to_string(c) + " repeats a vertex");
            const auto key = std::minmax(a, b);
            auto it = lookup.find({key.first, key.second});
            if (it == lookup.end()) {
                Face f;
                f.vertices = {a, b};
                f.left = c;
                const Vec2 t = vertices_[b] - vertices_[a];
                f.length = t.norm();
                if (!(f.length > 0.0))
                    throw MeshError(MeshError::Kind::geometry, "zero-length edge in cell " + std::to_string(c));
                f.normal = Vec2(t.y(), -t.x()) / f.length;
                lookup.emplace(std::pair{key.first, key.second}, faces_.size());
                cell_faces_[c].push_back({faces_.size(), 1.0});
                faces_.push_back(f);
            } else {
                Face& f = faces_[it->second];
                if (!f.is_boundary())
                    throw MeshError(MeshError::Kind::topology,
                                    "edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                                        ") is shared by more than two cells");
                if (f.vertices[0] != b || f.vertices[1] != a)
                    throw MeshError(MeshError::Kind::topology,
                                    "cells " + std::to_string(f.left) + " and " + std::to_string(c) +
                                        " traverse a shared edge in the same direction (overlap)");
                f.right = c;
                cell_faces_[c].push_back({it->second, -1.0});
            }
        }
    }
    for (std::size_t f = 0; f < faces_.size(); ++f)
        (faces_[f].is_boundary() ? boundary_faces_ : interior_faces_).push_back(f);
}

inline void PolyMesh::validate() const {
    // Star-shapedness with respect to the centroid: every fan triangle is positive
    // and the fan winds exactly once.
    for (std::size_t c = 0; c < loops_.size(); ++c) {
        const auto& loop = loops_[c];
        const std::size_t m = loop.size();
        const Vec2& x0 = centroids_[c];
        double winding = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const Vec2 a = vertices_[loop[i]] - x0;
            const Vec2 b = vertices_[loop[(i + 1) % m]] - x0;
            const double tri2 = cross(a, b);
            if (!(tri2 > 1e-12 * areas_[c]))
                throw MeshError(MeshError::Kind::topology,
                                "cell " + std::to_string(c) + " is not star-shaped with respect to its centroid");
            winding += std::atan2(tri2, a.dot(b));
        }
        if (std::abs(winding - 2.0 * std::numbers::pi) > 1e-8)
            throw MeshError(MeshError::Kind::topology, "cell " + std::to_string(c) + " is not a simple polygon");
    }
    // A hanging vertex shows up as a vertex lying inside a one-sided edge.
    for (Index f : boundary_faces_) {
        const Face& face = faces_[f];
        const Vec2& a = vertices_[face.vertices[0]];
        const Vec2 t = vertices_[face.vertices[1]] - a;
        const double len2 = t.squaredNorm();
        for (std::size_t v = 0; v < vertices_.size(); ++v) {
            if (v == face.vertices[0] || v == face.vertices[1]) continue;
            const Vec2 d = vertices_[v] - a;
            const double s = d.dot(t) / len2;
            if (s <= 1e-12 || s >= 1.0 - 1e-12) continue;
            if (std::abs(cross(t, d)) <= 1e-12 * len2)
                throw MeshError(MeshError::Kind::topology,
                                "non-conforming edge: vertex " + std::to_string(v) + " hangs on face " +
                                    std::to_string(f));
        }
    }
}

enum class MeshKind { tri, quad, hexdom, file };

inline std::string_view to_string(MeshKind k) {
    switch (k) {
        case MeshKind::tri: return "tri";
        case MeshKind::quad: return "quad";
        case MeshKind::hexdom: return "hexdom";
        case MeshKind::file: return "file";
    }
    return "?";
}

/// Corner-cut fraction used by the hexdom generator: each interior grid vertex
/// is split into a short edge of length 0.3 * h along the (1,1) direction.
inline constexpr double hexdom_cut_fraction = 0.3;

/// Structured meshes of a rectangle from an n x n grid.
///   tri    : 2n^2 triangles (each square split along its (1,1) diagonal)
///   quad   : n^2 rectangles
///   hexdom : interior grid vertices split into short edges, turning interior
///            cells into hexagons and boundary cells into pentagons
inline PolyMesh generate_structured(MeshKind kind, std::size_t n, const Rect& domain = {}) {
    if (n < 1) throw MeshError(MeshError::Kind::geometry, "grid size must be at least 1");
    const double hx = domain.width() / static_cast<double>(n);
    const double hy = domain.height() / static_cast<double>(n);
    auto grid_point = [&](std::size_t i, std::size_t j) {
        // exact endpoints so that boundary coordinates are not perturbed by rounding
        const double x = i == n ? domain.x1 : domain.x0 + static_cast<double>(i) * hx;
        const double y = j == n ? domain.y1 : domain.y0 + static_cast<double>(j) * hy;
        return Vec2(x, y);
    };
    auto gid = [n](std::size_t i, std::size_t j) { return static_cast<Index>(j * (n + 1) + i); };

    std::vector<Vec2> verts;
    std::vector<std::vector<Index>> loops;
    switch (kind) {
        case MeshKind::quad:
        case MeshKind::tri: {
            verts.reserve((n + 1) * (n + 1));
            for (std::size_t j = 0; j <= n; ++j)
                for (std::size_t i = 0; i <= n; ++i) verts.push_back(grid_point(i, j));
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t i = 0; i < n; ++i) {
                    const Index sw = gid(i, j), se = gid(i + 1, j), ne = gid(i + 1, j + 1), nw = gid(i, j + 1);
                    if (kind == MeshKind::quad) {
                        loops.push_back({sw, se, ne, nw});
                    } else {
                        loops.push_back({sw, se, ne});
                        loops.push_back({sw, ne, nw});
                    }
                }
            break;
        }
        case MeshKind::hexdom: {
            const double c = hexdom_cut_fraction / (2.0 * std::numbers::sqrt2);
            const Vec2 shift(c * hx, c * hy);
            // lower[v] = v - shift, upper[v] = v + shift; equal for boundary vertices
            std::vector<Index> lower((n + 1) * (n + 1)), upper((n + 1) * (n + 1));
            for (std::size_t j = 0; j <= n; ++j)
                for (std::size_t i = 0; i <= n; ++i) {
                    const Vec2 p = grid_point(i, j);
                    const bool interior = i > 0 && i < n && j > 0 && j < n;
                    if (interior) {
                        lower[gid(i, j)] = verts.size();
                        verts.push_back(p - shift);
                        upper[gid(i, j)] = verts.size();
                        verts.push_back(p + shift);
                    } else {
                        lower[gid(i, j)] = upper[gid(i, j)] = verts.size();
                        verts.push_back(p);
                    }
                }
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t i = 0; i < n; ++i) {
                    const Index sw = gid(i, j), se = gid(i + 1, j), ne = gid(i + 1, j + 1), nw = gid(i, j + 1);
                    std::vector<Index> loop;
                    loop.push_back(upper[sw]);
                    loop.push_back(lower[se]);
                    if (upper[se] != lower[se]) loop.push_back(upper[se]);
                    loop.push_back(lower[ne]);
                    loop.push_back(upper[nw]);
                    if (upper[nw] != lower[nw]) loop.push_back(lower[nw]);
                    loops.push_back(std::move(loop));
                }
            break;
        }
        case MeshKind::file:
            throw MeshError(MeshError::Kind::geometry, "file meshes are read, not generated");
    }
    return PolyMesh::from_loops(std::move(verts), std::move(loops));
}

/// Parses the plain-text "poly2d" format:
///   poly2d <nv> <nc>
///   x y              (nv lines)
///   m i1 ... im      (nc lines, 0-based counter-clockwise vertex indices)
inline PolyMesh read_mesh(std::string_view text) {
    std::vector<std::string> lines;
    {
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const auto nl = text.find('\n', pos);
            const auto end = nl == std::string_view::npos ? text.size() : nl;
            lines.emplace_back(text.substr(pos, end - pos));
            if (nl == std::string_view::npos) break;
            pos = nl + 1;
        }
        while (!lines.empty() && lines.back().find_first_not_of(" \t\r") == std::string::npos) lines.pop_back();
    }
    auto fail = [](std::size_t line, const std::string& msg) -> MeshError {
        return MeshError(MeshError::Kind::parse, msg, line);
    };
    if (lines.empty()) throw fail(1, "empty mesh file");

    std::size_t nv = 0, nc = 0;
    {
        std::istringstream in(lines[0]);
        std::string tag;
        long long a = -1, b = -1;
        if (!(in >> tag >> a >> b) || tag != "poly2d" || a < 0 || b < 1)
            throw fail(1, "expected header 'poly2d <nv> <nc>'");
        std::string extra;
        if (in >> extra) throw fail(1, "trailing tokens after header");
        nv = static_cast<std::size_t>(a);
        nc = static_cast<std::size_t>(b);
    }
    if (lines.size() != 1 + nv + nc)
        throw fail(lines.size(), "expected " + std::to_string(1 + nv + nc) + " lines, found " +
                                     std::to_string(lines.size()));

    std::vector<Vec2> verts(nv);
    for (std::size_t i = 0; i < nv; ++i) {
        std::istringstream in(lines[1 + i]);
        double x, y;
        std::string extra;
        if (!(in >> x >> y) || (in >> extra)) throw fail(2 + i, "expected 'x y'");
        verts[i] = Vec2(x, y);
    }
    std::vector<std::vector<Index>> loops(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        const std::size_t lineno = 2 + nv + c;
        std::istringstream in(lines[1 + nv + c]);
        long long m;
        if (!(in >> m) || m < 3) throw fail(lineno, "expected vertex count >= 3");
        for (long long i = 0; i < m; ++i) {
            long long v;
            if (!(in >> v)) throw fail(lineno, "expected " + std::to_string(m) + " vertex indices");
            if (v < 0 || static_cast<std::size_t>(v) >= nv) throw fail(lineno, "vertex index out of range");
            loops[c].push_back(static_cast<Index>(v));
        }
        std::string extra;
        if (in >> extra) throw fail(lineno, "trailing tokens after cell loop");
    }
    return PolyMesh::from_loops(std::move(verts), std::move(loops));
}

inline std::string write_mesh(const PolyMesh& mesh) {
    std::ostringstream out;
    out.precision(17);
    out << "poly2d " << mesh.num_vertices() << ' ' << mesh.num_cells() << '\n';
    for (const auto& v : mesh.vertices()) out << v.x() << ' ' << v.y() << '\n';
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto loop = mesh.cell_vertices(c);
        out << loop.size();
        for (Index v : loop) out << ' ' << v;
        out << '\n';
    }
    return out.str();
}

/// Splits every m-gon into m quadrilaterals joining its centroid to edge midpoints.
inline PolyMesh refine_barycentric(const PolyMesh& mesh) {
    std::vector<Vec2> verts = mesh.vertices();
    std::vector<Index> midpoint(mesh.num_faces());
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
        const auto& face = mesh.face(f);
        midpoint[f] = verts.size();
        verts.push_back(0.5 * (mesh.vertex(face.vertices[0]) + mesh.vertex(face.vertices[1])));
    }
    std::vector<std::vector<Index>> loops;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const Index center = verts.size();
        verts.push_back(mesh.cell_centroid(c));
        const auto loop = mesh.cell_vertices(c);
        const auto faces = mesh.cell_faces(c);
        const std::size_t m = loop.size();
        // local face i joins loop[i] and loop[i+1]
        for (std::size_t i = 0; i < m; ++i) {
            const Index prev_mid = midpoint[faces[(i + m - 1) % m].face];
            const Index next_mid = midpoint[faces[i].face];
            loops.push_back({loop[i], next_mid, center, prev_mid});
        }
    }
    return PolyMesh::from_loops(std::move(verts), std::move(loops));
}

/// Sequence of meshes with decreasing maximum cell diameter.
struct MeshFamily {
    MeshKind kind = MeshKind::quad;
    std::vector<PolyMesh> levels;

    /// Ratios h_{j+1}/h_j of successive maximum diameters.
    std::vector<double> diameter_ratios() const {
        std::vector<double> r;
        for (std::size_t j = 1; j < levels.size(); ++j)
            r.push_back(levels[j].max_diameter() / levels[j - 1].max_diameter());
        return r;
    }
};

/// Level j uses n = n0 * 2^j.
inline MeshFamily build_family(MeshKind kind, std::size_t levels, std::size_t n0, const Rect& domain = {}) {
    if (levels < 2) throw MeshError(MeshError::Kind::geometry, "a mesh family needs at least 2 levels");
    MeshFamily family{kind, {}};
    for (std::size_t j = 0; j < levels; ++j) family.levels.push_back(generate_structured(kind, n0 << j, domain));
    return family;
}

/// Family obtained by repeated barycentric refinement of a given coarse mesh.
inline MeshFamily build_family(const PolyMesh& coarse, std::size_t levels) {
    if (levels < 2) throw MeshError(MeshError::Kind::geometry, "a mesh family needs at least 2 levels");
    MeshFamily family{MeshKind::file, {coarse}};
    for (std::size_t j = 1; j < levels; ++j) family.levels.push_back(refine_barycentric(family.levels.back()));
    return family;
}

}  // namespace hdgns
