#pragma once

#include <cmath>
#include <functional>

#include "hdgns/quadrature.hpp"
#include "hdgns/spaces.hpp"
#include "hdgns/state.hpp"

namespace hdgns {

/// Piecewise vector field: value and gradient evaluable on each cell.
struct CellField {
    std::function<Vec2(Index, const Vec2&)> value;
    std::function<Mat2(Index, const Vec2&)> gradient;
};

/// Vector field on the mesh skeleton, evaluable on each face.
struct TraceField {
    std::function<Vec2(Index, const Vec2&)> value;
};

inline CellField velocity_field(const HDGState& state) {
    return {[state](Index c, const Vec2& x) { return eval_velocity(*state.spaces, c, state.u(c), x); },
            [state](Index c, const Vec2& x) { return eval_velocity_gradient(*state.spaces, c, state.u(c), x); }};
}

inline TraceField trace_field(const HDGState& state) {
    return {[state](Index f, const Vec2& x) { return eval_trace(*state.spaces, f, state.uhat(f), x); }};
}

inline CellField analytic_field(std::function<Vec2(const Vec2&)> v, std::function<Mat2(const Vec2&)> grad) {
    return {[v](Index, const Vec2& x) { return v(x); }, [grad](Index, const Vec2& x) { return grad(x); }};
}

inline TraceField analytic_trace(std::function<Vec2(const Vec2&)> v) {
    return {[v](Index, const Vec2& x) { return v(x); }};
}

inline CellField operator-(const CellField& a, const CellField& b) {
    return {[a, b](Index c, const Vec2& x) { return Vec2(a.value(c, x) - b.value(c, x)); },
            [a, b](Index c, const Vec2& x) { return Mat2(a.gradient(c, x) - b.gradient(c, x)); }};
}

inline TraceField operator-(const TraceField& a, const TraceField& b) {
    return {[a, b](Index f, const Vec2& x) { return Vec2(a.value(f, x) - b.value(f, x)); }};
}

inline CellField operator*(double s, const CellField& a) {
    return {[s, a](Index c, const Vec2& x) { return Vec2(s * a.value(c, x)); },
            [s, a](Index c, const Vec2& x) { return Mat2(s * a.gradient(c, x)); }};
}

inline TraceField operator*(double s, const TraceField& a) {
    return {[s, a](Index f, const Vec2& x) { return Vec2(s * a.value(f, x)); }};
}

/// ||v||_Omega.
inline double l2_norm(const PolyMesh& mesh, const CellField& v, int order) {
    double sum = 0.0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto rule = cell_quadrature(mesh, c, order);
        for (std::size_t q = 0; q < rule.size(); ++q) sum += rule.weights[q] * v.value(c, rule.points[q]).squaredNorm();
    }
    return std::sqrt(sum);
}

/// |||(v, mu)|||_{1,h} = (||grad v||^2_{T_h} + sum_K h_K^{-1} ||v - mu||^2_{dK})^{1/2}.
inline double triple_norm_1h(const PolyMesh& mesh, const CellField& v, const TraceField& mu, int order) {
    double sum = 0.0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto rule = cell_quadrature(mesh, c, order);
        for (std::size_t q = 0; q < rule.size(); ++q)
            sum += rule.weights[q] * v.gradient(c, rule.points[q]).squaredNorm();
        const double hinv = 1.0 / mesh.cell_diameter(c);
        for (const auto& cf : mesh.cell_faces(c)) {
            const auto fr = face_quadrature(mesh, cf.face, order);
            for (std::size_t q = 0; q < fr.size(); ++q)
                sum += hinv * fr.weights[q] * (v.value(c, fr.points[q]) - mu.value(cf.face, fr.points[q])).squaredNorm();
        }
    }
    return std::sqrt(sum);
}

/// |||(v, mu)|||_{0,h} = (||v||^2 + sum_K h_K (||mu||^2_{dK} + ||v - mu||^2_{dK}))^{1/2}.
inline double triple_norm_0h(const PolyMesh& mesh, const CellField& v, const TraceField& mu, int order) {
    double sum = 0.0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto rule = cell_quadrature(mesh, c, order);
        for (std::size_t q = 0; q < rule.size(); ++q) sum += rule.weights[q] * v.value(c, rule.points[q]).squaredNorm();
        const double h = mesh.cell_diameter(c);
        for (const auto& cf : mesh.cell_faces(c)) {
            const auto fr = face_quadrature(mesh, cf.face, order);
            for (std::size_t q = 0; q < fr.size(); ++q) {
                const Vec2 m = mu.value(cf.face, fr.points[q]);
                sum += h * fr.weights[q] * (m.squaredNorm() + (v.value(c, fr.points[q]) - m).squaredNorm());
            }
        }
    }
    return std::sqrt(sum);
}

/// |||(v, mu)|||_{inf,h} = ||v||_{L^inf} + ||mu||_{L^inf(E_h)}, sampled at quadrature
/// points plus cell vertices (resp. face end points). Uses the Euclidean magnitude.
inline double triple_norm_infh(const PolyMesh& mesh, const CellField& v, const TraceField& mu, int order) {
    double vmax = 0.0, mmax = 0.0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto rule = cell_quadrature(mesh, c, order);
        for (const auto& x : rule.points) vmax = std::max(vmax, v.value(c, x).norm());
        for (Index vi : mesh.cell_vertices(c)) vmax = std::max(vmax, v.value(c, mesh.vertex(vi)).norm());
    }
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
        const auto fr = face_quadrature(mesh, f, order);
        for (const auto& x : fr.points) mmax = std::max(mmax, mu.value(f, x).norm());
        for (Index vi : mesh.face(f).vertices) mmax = std::max(mmax, mu.value(f, mesh.vertex(vi)).norm());
    }
    return vmax + mmax;
}

/// Discrete H1 seminorm ||v||_{1,h} = |||(v, {{v}})|||_{1,h}; on boundary faces {{v}} = v.
inline double discrete_H1(const PolyMesh& mesh, const CellField& v, int order) {
    double sum = 0.0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto rule = cell_quadrature(mesh, c, order);
        for (std::size_t q = 0; q < rule.size(); ++q)
            sum += rule.weights[q] * v.gradient(c, rule.points[q]).squaredNorm();
        const double hinv = 1.0 / mesh.cell_diameter(c);
        for (const auto& cf : mesh.cell_faces(c)) {
            const Face& face = mesh.face(cf.face);
            if (face.is_boundary()) continue;
            const Index other = face.left == c ? face.right : face.left;
            const auto fr = face_quadrature(mesh, cf.face, order);
            for (std::size_t q = 0; q < fr.size(); ++q) {
                const Vec2& x = fr.points[q];
                sum += hinv * fr.weights[q] * (0.5 * (v.value(c, x) - v.value(other, x))).squaredNorm();
            }
        }
    }
    return std::sqrt(sum);
}

/// |||(u_h, uhat_h)|||_{1,h} of a discrete state, evaluated with tabulated data
/// (exact for the discrete spaces).
inline double triple_norm_1h(const HDGState& state) {
    const SpaceSet& s = *state.spaces;
    const PolyMesh& mesh = s.mesh();
    const std::size_t n = s.modes_k1(), m = s.face_size_per_component();
    double sum = 0.0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto& d = s.cell_linear(c);
        const Eigen::Map<const Vector> w(d.rule.weights.data(), d.rule.size());
        const auto u = state.u(c);
        for (std::size_t i = 0; i < 2; ++i) {
            sum += w.dot((d.dphi_x * u.segment(i * n, n)).array().square().matrix());
            sum += w.dot((d.dphi_y * u.segment(i * n, n)).array().square().matrix());
        }
        const double hinv = 1.0 / mesh.cell_diameter(c);
        const auto faces = mesh.cell_faces(c);
        for (std::size_t j = 0; j < faces.size(); ++j) {
            const auto& fd = s.face_linear(faces[j].face);
            const Eigen::Map<const Vector> wf(fd.rule.weights.data(), fd.rule.size());
            const Matrix& phi = s.cell_on_face_linear(c, j);
            const auto uh = state.uhat(faces[j].face);
            for (std::size_t i = 0; i < 2; ++i) {
                const Vector diff = phi * u.segment(i * n, n) - fd.psi * uh.segment(i * m, m);
                sum += hinv * wf.dot(diff.array().square().matrix());
            }
        }
    }
    return std::sqrt(sum);
}

}  // namespace hdgns
