#pragma once

#include <cmath>
#include <vector>

#include "hdgns/mesh.hpp"
#include "hdgns/quadrature.hpp"
#include "hdgns/types.hpp"

namespace hdgns {

/// Number of scalar polynomials of total degree <= degree in 2D.
constexpr std::size_t poly_dim(int degree) {
    return degree < 0 ? 0 : static_cast<std::size_t>((degree + 1) * (degree + 2) / 2);
}

/// Orthonormal scalar modes of P_degree on one cell.
///
/// Modes are centroid-shifted, h_K-scaled monomials orthonormalized (modified
/// Gram-Schmidt, applied twice) in the cell quadrature inner product. Monomials
/// are graded by total degree, so the first poly_dim(l) modes span P_l for every
/// l <= degree; mode 0 is the constant 1/sqrt(|K|).
class CellBasis {
public:
    CellBasis() = default;

    CellBasis(const PolyMesh& mesh, Index cell, int degree)
        : degree_(degree), center_(mesh.cell_centroid(cell)), scale_(mesh.cell_diameter(cell)) {
        for (int d = 0; d <= degree; ++d)
            for (int a = d; a >= 0; --a) exponents_.push_back({a, d - a});
        const std::size_t n = exponents_.size();
        const QuadRule rule = cell_quadrature(mesh, cell, 2 * degree + 2);

        Matrix mono(rule.size(), n);
        for (std::size_t q = 0; q < rule.size(); ++q) mono.row(q) = monomials(rule.points[q]).transpose();
        const Eigen::Map<const Vector> w(rule.weights.data(), rule.weights.size());

        coeffs_ = Matrix::Identity(n, n);
        Matrix values = mono;  // values.col(i) = mode i at the quadrature points
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < i; ++j) {
                    const double r = (values.col(i).array() * values.col(j).array() * w.array()).sum();
                    values.col(i) -= r * values.col(j);
                    coeffs_.row(i) -= r * coeffs_.row(j);
                }
                const double nrm = std::sqrt((values.col(i).array().square() * w.array()).sum());
                if (!(nrm > 0.0))
                    throw MeshError(MeshError::Kind::geometry,
                                    "basis construction failed on cell " + std::to_string(cell));
                values.col(i) /= nrm;
                coeffs_.row(i) /= nrm;
            }
        }
    }

    int degree() const { return degree_; }
    std::size_t size() const { return exponents_.size(); }

    /// Values of all modes at x.
    Vector eval(const Vec2& x) const { return coeffs_ * monomials(x); }

    /// Gradients of all modes at x, one row per mode.
    Eigen::Matrix<double, Eigen::Dynamic, 2> eval_grad(const Vec2& x) const {
        const std::size_t n = exponents_.size();
        Eigen::Matrix<double, Eigen::Dynamic, 2> g(n, 2);
        const Vec2 xi = (x - center_) / scale_;
        for (std::size_t i = 0; i < n; ++i) {
            const auto [a, b] = exponents_[i];
            g(i, 0) = a == 0 ? 0.0 : a * ipow(xi.x(), a - 1) * ipow(xi.y(), b) / scale_;
            g(i, 1) = b == 0 ? 0.0 : b * ipow(xi.x(), a) * ipow(xi.y(), b - 1) / scale_;
        }
        return coeffs_ * g;
    }

private:
    static double ipow(double x, int e) {
        double r = 1.0;
        for (int i = 0; i < e; ++i) r *= x;
        return r;
    }

    Vector monomials(const Vec2& x) const {
        const Vec2 xi = (x - center_) / scale_;
        Vector m(exponents_.size());
        for (std::size_t i = 0; i < exponents_.size(); ++i)
            m[i] = ipow(xi.x(), exponents_[i].first) * ipow(xi.y(), exponents_[i].second);
        return m;
    }

    int degree_ = 0;
    Vec2 center_ = Vec2::Zero();
    double scale_ = 1.0;
    std::vector<std::pair<int, int>> exponents_;
    Matrix coeffs_;
};

/// Orthonormal Legendre modes of P_degree on a straight face, parameterized by
/// arc length s in [0, h_F] from the face's first vertex.
class FaceBasis {
public:
    FaceBasis() = default;

    FaceBasis(const PolyMesh& mesh, Index face, int degree)
        : degree_(degree), origin_(mesh.vertex(mesh.face(face).vertices[0])), length_(mesh.face_length(face)) {
        tangent_ = (mesh.vertex(mesh.face(face).vertices[1]) - origin_) / length_;
    }

    int degree() const { return degree_; }
    std::size_t size() const { return static_cast<std::size_t>(degree_ + 1); }
    double length() const { return length_; }

    double param(const Vec2& x) const { return (x - origin_).dot(tangent_); }

    Vector eval_param(double s) const {
        const double t = 2.0 * s / length_ - 1.0;
        Vector v(size());
        double p0 = 1.0, p1 = t;
        for (int m = 0; m <= degree_; ++m) {
            double pm;
            if (m == 0) {
                pm = 1.0;
            } else if (m == 1) {
                pm = t;
            } else {
                pm = ((2.0 * m - 1.0) * t * p1 - (m - 1.0) * p0) / m;
                p0 = p1;
                p1 = pm;
            }
            v[m] = std::sqrt((2.0 * m + 1.0) / length_) * pm;
        }
        return v;
    }

    Vector eval(const Vec2& x) const { return eval_param(param(x)); }

private:
    int degree_ = 0;
    Vec2 origin_ = Vec2::Zero();
    Vec2 tangent_ = Vec2::UnitX();
    double length_ = 1.0;
};

}  // namespace hdgns
