#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "hdgns/basis.hpp"
#include "hdgns/mesh.hpp"
#include "hdgns/quadrature.hpp"
#include "hdgns/types.hpp"

namespace hdgns {

/// Quadrature points on a cell with the cell's V_h modes (and gradients) tabulated.
struct CellQuadData {
    QuadRule rule;
    Matrix phi;     // points x modes
    Matrix dphi_x;  // points x modes
    Matrix dphi_y;  // points x modes
};

/// Quadrature points on a face with the face modes tabulated.
struct FaceQuadData {
    QuadRule rule;
    Matrix psi;  // points x (k+1)
};

enum class Space { G, V, Q };

/// Discrete spaces G_h (2x2 tensors, P_k), V_h (vectors, P_{k+1}), Q_h (scalars,
/// P_k) and M_h (vectors on faces, P_k) together with their dof layout.
///
/// Cell dofs are stored per cell as [L | u | p]:
///   L: 4 * dim P_k, tensor entry (i,j) at block 2i+j,
///   u: 2 * dim P_{k+1}, component i at block i,
///   p: dim P_k.
/// Face dofs are 2 * (k+1) per face, component i at block i. The zero-mean
/// condition on Q_h is enforced at solve time.
class SpaceSet {
public:
    SpaceSet(const PolyMesh& mesh, int k) : mesh_(&mesh), k_(k) {
        if (k < 0) throw ConfigError("k", "polynomial degree must be >= 0");
        const std::size_t nc = mesh.num_cells(), nf = mesh.num_faces();
        bases_.reserve(nc);
        for (std::size_t c = 0; c < nc; ++c) bases_.emplace_back(mesh, c, k + 1);
        face_bases_.reserve(nf);
        for (std::size_t f = 0; f < nf; ++f) face_bases_.emplace_back(mesh, f, k);

        interior_index_.assign(nf, boundary_marker);
        for (std::size_t i = 0; i < mesh.interior_faces().size(); ++i) interior_index_[mesh.interior_faces()[i]] = i;

        for (int slot = 0; slot < 2; ++slot) {
            const int order = slot == 0 ? linear_order() : high_order();
            auto& cq = cell_quad_[slot];
            auto& fq = face_quad_[slot];
            auto& cf = cell_face_phi_[slot];
            cq.resize(nc);
            fq.resize(nf);
            cf.resize(nc);
            for (std::size_t f = 0; f < nf; ++f) {
                fq[f].rule = face_quadrature(mesh, f, order);
                fq[f].psi.resize(fq[f].rule.size(), face_size_per_component());
                for (std::size_t q = 0; q < fq[f].rule.size(); ++q)
                    fq[f].psi.row(q) = face_bases_[f].eval_param(fq[f].rule.params[q]).transpose();
            }
            for (std::size_t c = 0; c < nc; ++c) {
                auto& d = cq[c];
                d.rule = cell_quadrature(mesh, c, order);
                tabulate(bases_[c], d.rule.points, d.phi, &d.dphi_x, &d.dphi_y);
                const auto faces = mesh.cell_faces(c);
                cf[c].resize(faces.size());
                for (std::size_t j = 0; j < faces.size(); ++j)
                    tabulate(bases_[c], fq[faces[j].face].rule.points, cf[c][j], nullptr, nullptr);
            }
        }
    }

    const PolyMesh& mesh() const { return *mesh_; }
    int degree() const { return k_; }

    /// Quadrature order for bilinear (linear-coefficient) terms.
    int linear_order() const { return 2 * (k_ + 1) + 2; }
    /// Quadrature order for trilinear convective terms, loads and error integrals.
    int high_order() const { return std::max(3 * (k_ + 1) + 1, 2 * (k_ + 2) + 2); }

    std::size_t modes_k() const { return poly_dim(k_); }
    std::size_t modes_k1() const { return poly_dim(k_ + 1); }
    std::size_t face_size_per_component() const { return static_cast<std::size_t>(k_ + 1); }

    std::size_t g_size() const { return 4 * modes_k(); }
    std::size_t v_size() const { return 2 * modes_k1(); }
    std::size_t q_size() const { return modes_k(); }
    std::size_t cell_size() const { return g_size() + v_size() + q_size(); }
    std::size_t face_size() const { return 2 * face_size_per_component(); }

    std::size_t g_offset() const { return 0; }
    std::size_t v_offset() const { return g_size(); }
    std::size_t q_offset() const { return g_size() + v_size(); }

    std::size_t size(Space s) const {
        switch (s) {
            case Space::G: return g_size();
            case Space::V: return v_size();
            case Space::Q: return q_size();
        }
        return 0;
    }

    std::size_t num_cell_dofs() const { return mesh_->num_cells() * cell_size(); }
    std::size_t num_trace_dofs() const { return mesh_->num_faces() * face_size(); }
    std::size_t num_interior_trace_dofs() const { return mesh_->interior_faces().size() * face_size(); }

    /// Position of face f among interior faces, boundary_marker for boundary faces.
    Index interior_index(Index f) const { return interior_index_[f]; }

    const CellBasis& cell_basis(Index c) const { return bases_[c]; }
    const FaceBasis& face_basis(Index f) const { return face_bases_[f]; }

    const CellQuadData& cell_linear(Index c) const { return cell_quad_[0][c]; }
    const CellQuadData& cell_high(Index c) const { return cell_quad_[1][c]; }
    const FaceQuadData& face_linear(Index f) const { return face_quad_[0][f]; }
    const FaceQuadData& face_high(Index f) const { return face_quad_[1][f]; }
    /// Cell modes of `c` at the quadrature points of its local face `j`.
    const Matrix& cell_on_face_linear(Index c, std::size_t j) const { return cell_face_phi_[0][c][j]; }
    const Matrix& cell_on_face_high(Index c, std::size_t j) const { return cell_face_phi_[1][c][j]; }

private:
    static void tabulate(const CellBasis& basis, const std::vector<Vec2>& pts, Matrix& phi, Matrix* dx, Matrix* dy) {
        const std::size_t n = basis.size();
        phi.resize(pts.size(), n);
        if (dx) dx->resize(pts.size(), n);
        if (dy) dy->resize(pts.size(), n);
        for (std::size_t q = 0; q < pts.size(); ++q) {
            phi.row(q) = basis.eval(pts[q]).transpose();
            if (dx) {
                const auto g = basis.eval_grad(pts[q]);
                dx->row(q) = g.col(0).transpose();
                dy->row(q) = g.col(1).transpose();
            }
        }
    }

    const PolyMesh* mesh_;
    int k_;
    std::vector<CellBasis> bases_;
    std::vector<FaceBasis> face_bases_;
    std::vector<Index> interior_index_;
    std::vector<CellQuadData> cell_quad_[2];
    std::vector<FaceQuadData> face_quad_[2];
    std::vector<std::vector<Matrix>> cell_face_phi_[2];
};

namespace detail {
inline Vector components(double v) { return Vector::Constant(1, v); }
inline Vector components(const Vec2& v) { return v; }
inline Vector components(const Mat2& m) {
    Vector r(4);
    r << m(0, 0), m(0, 1), m(1, 0), m(1, 1);
    return r;
}
}  // namespace detail

/// L2 projection of a pointwise field onto G_h, V_h or Q_h restricted to one cell.
/// `field` returns double (Q), Vec2 (V) or Mat2 (G). Coefficients are laid out
/// as in the cell dof block of the target space.
template <class Field>
Vector project_cell(const SpaceSet& spaces, Space target, Index c, Field&& field) {
    const auto& d = spaces.cell_high(c);
    const std::size_t modes = target == Space::V ? spaces.modes_k1() : spaces.modes_k();
    const std::size_t ncomp = target == Space::G ? 4 : (target == Space::V ? 2 : 1);
    Vector coeffs = Vector::Zero(ncomp * modes);
    for (std::size_t q = 0; q < d.rule.size(); ++q) {
        const Vector val = detail::components(field(d.rule.points[q]));
        if (static_cast<std::size_t>(val.size()) != ncomp)
            throw std::invalid_argument("field component count does not match the target space");
        for (std::size_t i = 0; i < ncomp; ++i)
            coeffs.segment(i * modes, modes) += d.rule.weights[q] * val[i] * d.phi.row(q).head(modes).transpose();
    }
    return coeffs;
}

/// L2 projection onto M_h on one face (Pi_M).
template <class Field>
Vector project_face(const SpaceSet& spaces, Index f, Field&& field) {
    const auto& d = spaces.face_high(f);
    const std::size_t m = spaces.face_size_per_component();
    Vector coeffs = Vector::Zero(2 * m);
    for (std::size_t q = 0; q < d.rule.size(); ++q) {
        const Vec2 g = field(d.rule.points[q]);
        for (int i = 0; i < 2; ++i) coeffs.segment(i * m, m) += d.rule.weights[q] * g[i] * d.psi.row(q).transpose();
    }
    return coeffs;
}

/// Evaluation helpers for coefficient blocks laid out as in SpaceSet.
inline Vec2 eval_velocity(const SpaceSet& spaces, Index c, const Eigen::Ref<const Vector>& u, const Vec2& x) {
    const Vector phi = spaces.cell_basis(c).eval(x);
    const std::size_t n = spaces.modes_k1();
    return Vec2(phi.dot(u.segment(0, n)), phi.dot(u.segment(n, n)));
}

inline Mat2 eval_velocity_gradient(const SpaceSet& spaces, Index c, const Eigen::Ref<const Vector>& u, const Vec2& x) {
    const auto g = spaces.cell_basis(c).eval_grad(x);
    const std::size_t n = spaces.modes_k1();
    Mat2 r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r(i, j) = g.col(j).dot(u.segment(i * n, n));
    return r;
}

inline Mat2 eval_tensor(const SpaceSet& spaces, Index c, const Eigen::Ref<const Vector>& L, const Vec2& x) {
    const std::size_t n = spaces.modes_k();
    const Vector phi = spaces.cell_basis(c).eval(x).head(n);
    Mat2 r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r(i, j) = phi.dot(L.segment((2 * i + j) * n, n));
    return r;
}

inline double eval_scalar(const SpaceSet& spaces, Index c, const Eigen::Ref<const Vector>& p, const Vec2& x) {
    const std::size_t n = spaces.modes_k();
    return spaces.cell_basis(c).eval(x).head(n).dot(p.head(n));
}

inline Vec2 eval_trace(const SpaceSet& spaces, Index f, const Eigen::Ref<const Vector>& uhat, const Vec2& x) {
    const Vector psi = spaces.face_basis(f).eval(x);
    const std::size_t m = spaces.face_size_per_component();
    return Vec2(psi.dot(uhat.segment(0, m)), psi.dot(uhat.segment(m, m)));
}

}  // namespace hdgns
