#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "hdgns/mesh.hpp"
#include "hdgns/types.hpp"

namespace hdgns {

/// Points and positive weights. On faces `params` carries the arc-length
/// coordinate of each point measured from the face's first vertex.
struct QuadRule {
    std::vector<Vec2> points;
    std::vector<double> weights;
    std::vector<double> params;
    int order = 0;

    std::size_t size() const { return points.size(); }
    double weight_sum() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

/// n-point Gauss-Legendre nodes and weights on [-1, 1] (Newton on P_n).
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

/// Gauss rule on the segment [a, b], exact for polynomials of degree <= order.
inline QuadRule segment_quadrature(const Vec2& a, const Vec2& b, int order) {
    const int n = std::max(1, (order + 2) / 2);
    std::vector<double> x, w;
    gauss_legendre(n, x, w);
    const double len = (b - a).norm();
    QuadRule rule;
    rule.order = order;
    for (int i = 0; i < n; ++i) {
        const double t = 0.5 * (x[i] + 1.0);
        rule.points.push_back(a + t * (b - a));
        rule.weights.push_back(0.5 * w[i] * len);
        rule.params.push_back(t * len);
    }
    return rule;
}

/// Collapsed (Duffy) tensor Gauss rule on a triangle, appended to `rule`.
inline void append_triangle_quadrature(const Vec2& v0, const Vec2& v1, const Vec2& v2, int order, QuadRule& rule) {
    const int n = std::max(1, (order + 3) / 2);
    std::vector<double> x, w;
    gauss_legendre(n, x, w);
    const double jac = cross(v1 - v0, v2 - v0);
    for (int i = 0; i < n; ++i) {
        const double s = 0.5 * (x[i] + 1.0);
        for (int j = 0; j < n; ++j) {
            const double t = 0.5 * (x[j] + 1.0);
            const double l1 = s * (1.0 - t), l2 = s * t;
            rule.points.push_back(v0 + l1 * (v1 - v0) + l2 * (v2 - v0));
            rule.weights.push_back(0.25 * w[i] * w[j] * s * jac);
        }
    }
}

inline QuadRule triangle_quadrature(const Vec2& v0, const Vec2& v1, const Vec2& v2, int order) {
    QuadRule rule;
    rule.order = order;
    append_triangle_quadrature(v0, v1, v2, order, rule);
    return rule;
}

/// Fan triangulation from the centroid, one triangle rule per fan triangle.
inline QuadRule cell_quadrature(const PolyMesh& mesh, Index c, int order) {
    QuadRule rule;
    rule.order = order;
    const auto loop = mesh.cell_vertices(c);
    const Vec2& x0 = mesh.cell_centroid(c);
    const std::size_t m = loop.size();
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2& a = mesh.vertex(loop[i]);
        const Vec2& b = mesh.vertex(loop[(i + 1) % m]);
        if (!(cross(a - x0, b - x0) > 0.0))
            throw MeshError(MeshError::Kind::geometry, "degenerate fan triangle in cell " + std::to_string(c));
        append_triangle_quadrature(x0, a, b, order, rule);
    }
    return rule;
}

inline QuadRule face_quadrature(const PolyMesh& mesh, Index f, int order) {
    const auto& face = mesh.face(f);
    return segment_quadrature(mesh.vertex(face.vertices[0]), mesh.vertex(face.vertices[1]), order);
}

}  // namespace hdgns
