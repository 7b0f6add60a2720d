#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <variant>

#include "hdgns/spaces.hpp"
#include "hdgns/state.hpp"

namespace hdgns {

/// Convective stabilization max(w.n, 0).
constexpr double tau_c(double w_dot_n) { return w_dot_n > 0.0 ? w_dot_n : 0.0; }

enum class LocalField { L, u, p, trace };

/// Local dof ordering on one cell: [L | u | p | trace of local face 0 | face 1 | ...].
/// Rows use the same ordering for the test functions (G, v, q, mu).
struct LocalLayout {
    std::size_t g = 0, v = 0, q = 0, faces = 0, face = 0;

    LocalLayout() = default;
    LocalLayout(const SpaceSet& s, Index c)
        : g(s.g_size()), v(s.v_size()), q(s.q_size()), faces(s.mesh().cell_faces(c).size()), face(s.face_size()) {}

    std::size_t cell_size() const { return g + v + q; }
    std::size_t size() const { return cell_size() + faces * face; }
    std::size_t offset(LocalField f) const {
        switch (f) {
            case LocalField::L: return 0;
            case LocalField::u: return g;
            case LocalField::p: return g + v;
            case LocalField::trace: return g + v + q;
        }
        return 0;
    }
    std::size_t extent(LocalField f) const {
        switch (f) {
            case LocalField::L: return g;
            case LocalField::u: return v;
            case LocalField::p: return q;
            case LocalField::trace: return faces * face;
        }
        return 0;
    }
    std::size_t face_offset(std::size_t j) const { return cell_size() + j * face; }
};

/// Element matrix of a bilinear pairing restricted to one cell.
struct LocalBlocks {
    LocalLayout layout;
    Matrix matrix;

    auto block(LocalField row, LocalField col) const {
        return matrix.block(layout.offset(row), layout.offset(col), layout.extent(row), layout.extent(col));
    }
};

/// Convecting field (w, what) for the operator O. Either zero, the velocity and
/// trace of a discrete state, or an analytic field whose trace is its restriction
/// to the faces (single valued by construction) unless a separate trace is given.
class ConvectionField {
public:
    using VectorFn = std::function<Vec2(const Vec2&)>;
    using ScalarFn = std::function<double(const Vec2&)>;

    static ConvectionField zero() { return ConvectionField{}; }

    static ConvectionField discrete(const HDGState& state) {
        ConvectionField cf;
        cf.source_ = state;
        return cf;
    }

    static ConvectionField analytic(VectorFn w, ScalarFn div_w, VectorFn trace = {}) {
        ConvectionField cf;
        cf.source_ = Analytic{std::move(w), std::move(div_w), std::move(trace)};
        return cf;
    }

    bool is_zero() const { return std::holds_alternative<std::monostate>(source_); }
    /// True when what = w|_F on every face.
    bool trace_is_restriction() const {
        if (auto* a = std::get_if<Analytic>(&source_)) return !a->trace;
        return is_zero();
    }

    /// w (points x 2) and div w at the high-order quadrature points of cell c.
    void sample_cell(const SpaceSet& s, Index c, Matrix& w, Vector& div) const {
        const auto& d = s.cell_high(c);
        const std::size_t np = d.rule.size();
        w = Matrix::Zero(np, 2);
        div = Vector::Zero(np);
        if (auto* st = std::get_if<HDGState>(&source_)) {
            const auto u = st->u(c);
            const std::size_t n = s.modes_k1();
            w.col(0) = d.phi * u.segment(0, n);
            w.col(1) = d.phi * u.segment(n, n);
            div = d.dphi_x * u.segment(0, n) + d.dphi_y * u.segment(n, n);
        } else if (auto* a = std::get_if<Analytic>(&source_)) {
            for (std::size_t q = 0; q < np; ++q) {
                w.row(q) = a->w(d.rule.points[q]).transpose();
                div[q] = a->div_w(d.rule.points[q]);
            }
        }
    }

    /// Cell trace of w and the face trace what at the high-order quadrature
    /// points of local face j of cell c.
    void sample_face(const SpaceSet& s, Index c, std::size_t j, Matrix& w_cell, Matrix& w_hat) const {
        const Index f = s.mesh().cell_faces(c)[j].face;
        const auto& fd = s.face_high(f);
        const std::size_t np = fd.rule.size();
        w_cell = Matrix::Zero(np, 2);
        w_hat = Matrix::Zero(np, 2);
        if (auto* st = std::get_if<HDGState>(&source_)) {
            const auto u = st->u(c);
            const auto uh = st->uhat(f);
            const std::size_t n = s.modes_k1(), m = s.face_size_per_component();
            const Matrix& phi = s.cell_on_face_high(c, j);
            w_cell.col(0) = phi * u.segment(0, n);
            w_cell.col(1) = phi * u.segment(n, n);
            w_hat.col(0) = fd.psi * uh.segment(0, m);
            w_hat.col(1) = fd.psi * uh.segment(m, m);
        } else if (auto* a = std::get_if<Analytic>(&source_)) {
            for (std::size_t q = 0; q < np; ++q) {
                const Vec2& x = fd.rule.points[q];
                w_cell.row(q) = a->w(x).transpose();
                w_hat.row(q) = (a->trace ? a->trace(x) : a->w(x)).transpose();
            }
        }
    }

private:
    struct Analytic {
        VectorFn w;
        ScalarFn div_w;
        VectorFn trace;
    };
    std::variant<std::monostate, HDGState, Analytic> source_;
};

namespace detail {
// Places `blk` on both velocity/trace components (the pairings are component-diagonal).
template <class Blk>
void add_diag2(Matrix& m, std::size_t r0, std::size_t rstride, std::size_t c0, std::size_t cstride, const Blk& blk) {
    for (std::size_t i = 0; i < 2; ++i)
        m.block(r0 + i * rstride, c0 + i * cstride, blk.rows(), blk.cols()) += blk;
}
}  // namespace detail

/// Element matrix of the bilinear form S on cell c:
///   (L,G) + (u, div G) - <uhat, G n> - (v, div nu L) + <mu, nu L n>
///   - (u, grad q) + <uhat.n, q> + (v, grad p) - <mu.n, p>
///   + <(nu/h_K)(Pi_M u - uhat), v - mu>
inline LocalBlocks local_S_blocks(const SpaceSet& s, Index c, double nu) {
    const LocalLayout lay(s, c);
    LocalBlocks out{lay, Matrix::Zero(lay.size(), lay.size())};
    Matrix& A = out.matrix;
    const std::size_t nk = s.modes_k(), nk1 = s.modes_k1(), m = s.face_size_per_component();
    const std::size_t oL = lay.offset(LocalField::L), ou = lay.offset(LocalField::u), op = lay.offset(LocalField::p);

    const auto& d = s.cell_linear(c);
    const Eigen::Map<const Vector> w(d.rule.weights.data(), d.rule.size());
    const Matrix wphi = w.asDiagonal() * d.phi;
    const Matrix mass_k = d.phi.leftCols(nk).transpose() * wphi.leftCols(nk);
    // D[j](b, a) = (d_j phi_b, phi_a), b in P_k, a in P_{k+1}
    const Matrix D[2] = {d.dphi_x.leftCols(nk).transpose() * wphi, d.dphi_y.leftCols(nk).transpose() * wphi};

    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            const std::size_t e = oL + (2 * i + j) * nk;
            A.block(e, e, nk, nk) += mass_k;
            A.block(e, ou + i * nk1, nk, nk1) += D[j];
            A.block(ou + i * nk1, e, nk1, nk) -= nu * D[j].transpose();
        }
    for (std::size_t i = 0; i < 2; ++i) {
        A.block(ou + i * nk1, op, nk1, nk) += D[i].transpose();
        A.block(op, ou + i * nk1, nk, nk1) -= D[i];
    }

    const double stab = nu / s.mesh().cell_diameter(c);
    const auto faces = s.mesh().cell_faces(c);
    for (std::size_t jf = 0; jf < faces.size(); ++jf) {
        const Index f = faces[jf].face;
        const Vec2 n = s.mesh().outward_normal(c, jf);
        const auto& fd = s.face_linear(f);
        const Eigen::Map<const Vector> wf(fd.rule.weights.data(), fd.rule.size());
        const Matrix& phiF = s.cell_on_face_linear(c, jf);
        const Matrix E = phiF.leftCols(nk).transpose() * wf.asDiagonal() * fd.psi;  // (phi_b, psi_m)_F
        const Matrix P = fd.psi.transpose() * wf.asDiagonal() * phiF;               // (psi_m, phi_a)_F
        const Matrix mass_f = fd.psi.transpose() * wf.asDiagonal() * fd.psi;
        const std::size_t ot = lay.face_offset(jf);

        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < 2; ++j) {
                const std::size_t e = oL + (2 * i + j) * nk;
                A.block(e, ot + i * m, nk, m) -= n[j] * E;
                A.block(ot + i * m, e, m, nk) += nu * n[j] * E.transpose();
            }
            A.block(ot + i * m, op, m, nk) -= n[i] * E.transpose();
            A.block(op, ot + i * m, nk, m) += n[i] * E;
        }
        detail::add_diag2(A, ou, nk1, ou, nk1, Matrix(stab * P.transpose() * P));
        detail::add_diag2(A, ou, nk1, ot, m, Matrix(-stab * P.transpose()));
        detail::add_diag2(A, ot, m, ou, nk1, Matrix(-stab * P));
        detail::add_diag2(A, ot, m, ot, m, Matrix(stab * mass_f));
    }
    return out;
}

/// Element matrix of the convective operator O((w, what); (u, uhat), (v, mu)) on cell c:
///   -(u (x) w, grad v) - (1/2 (div w) u, v) + <1/2 u (x) (w - what) n, v>
///   + <tau_C(what) (u - uhat), v - mu> + <(uhat (x) what) n, v - mu>
/// Only the u/trace rows and columns are populated.
inline LocalBlocks local_O_blocks(const SpaceSet& s, Index c, const ConvectionField& conv) {
    const LocalLayout lay(s, c);
    LocalBlocks out{lay, Matrix::Zero(lay.size(), lay.size())};
    if (conv.is_zero()) return out;
    Matrix& A = out.matrix;
    const std::size_t nk1 = s.modes_k1(), m = s.face_size_per_component();
    const std::size_t ou = lay.offset(LocalField::u);

    const auto& d = s.cell_high(c);
    const Eigen::Map<const Vector> w(d.rule.weights.data(), d.rule.size());
    Matrix wv;
    Vector div;
    conv.sample_cell(s, c, wv, div);
    const Matrix w_dot_grad = wv.col(0).asDiagonal() * d.dphi_x + wv.col(1).asDiagonal() * d.dphi_y;
    Matrix cell = -(w_dot_grad.transpose() * w.asDiagonal() * d.phi);
    cell -= 0.5 * d.phi.transpose() * (w.array() * div.array()).matrix().asDiagonal() * d.phi;
    detail::add_diag2(A, ou, nk1, ou, nk1, cell);

    const auto faces = s.mesh().cell_faces(c);
    Matrix w_cell, w_hat;
    for (std::size_t jf = 0; jf < faces.size(); ++jf) {
        const Index f = faces[jf].face;
        const Vec2 n = s.mesh().outward_normal(c, jf);
        const auto& fd = s.face_high(f);
        const Eigen::Map<const Vector> wf(fd.rule.weights.data(), fd.rule.size());
        const Matrix& phiF = s.cell_on_face_high(c, jf);
        conv.sample_face(s, c, jf, w_cell, w_hat);
        const Vector wn = w_hat * n;
        const Vector jump_n = (w_cell - w_hat) * n;
        Vector tau(wn.size());
        for (Eigen::Index q = 0; q < wn.size(); ++q) tau[q] = tau_c(wn[q]);

        const Vector a_uv = wf.array() * (0.5 * jump_n + tau).array();
        const Vector a_tau = wf.array() * tau.array();
        const Vector a_wn = wf.array() * wn.array();
        const std::size_t ot = lay.face_offset(jf);
        detail::add_diag2(A, ou, nk1, ou, nk1, Matrix(phiF.transpose() * a_uv.asDiagonal() * phiF));
        detail::add_diag2(A, ou, nk1, ot, m, Matrix(phiF.transpose() * (a_wn - a_tau).asDiagonal() * fd.psi));
        detail::add_diag2(A, ot, m, ou, nk1, Matrix(-(fd.psi.transpose() * a_tau.asDiagonal() * phiF)));
        detail::add_diag2(A, ot, m, ot, m, Matrix(fd.psi.transpose() * (a_tau - a_wn).asDiagonal() * fd.psi));
    }
    return out;
}

/// Moments (f, v)_K of a forcing against the V_h modes of cell c (layout of the u block).
template <class Forcing>
Vector local_load(const SpaceSet& s, Index c, Forcing&& f) {
    const auto& d = s.cell_high(c);
    const std::size_t n = s.modes_k1();
    Vector b = Vector::Zero(2 * n);
    for (std::size_t q = 0; q < d.rule.size(); ++q) {
        const Vec2 fx = f(d.rule.points[q]);
        b.segment(0, n) += d.rule.weights[q] * fx.x() * d.phi.row(q).transpose();
        b.segment(n, n) += d.rule.weights[q] * fx.y() * d.phi.row(q).transpose();
    }
    return b;
}

}  // namespace hdgns
