#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "hdgns/mesh.hpp"
#include "hdgns/types.hpp"

namespace hdgns {

/// Partial derivatives of a stream function up to third order.
struct StreamDerivatives {
    double x = 0, y = 0, xx = 0, xy = 0, yy = 0, xxx = 0, xxy = 0, xyy = 0, yyy = 0;
};

/// Divergence-free exact solution u = (d psi/dy, -d psi/dx), pressure p, viscosity nu.
/// The forcing is f = -nu lap u + (u.grad) u + grad p (convection omitted for Stokes cases).
class ManufacturedCase {
public:
    using StreamFn = std::function<StreamDerivatives(const Vec2&)>;
    using PressureFn = std::function<std::pair<double, Vec2>(const Vec2&)>;

    ManufacturedCase(std::string name, double nu, StreamFn psi, PressureFn p, bool convective)
        : name_(std::move(name)), nu_(nu), psi_(std::move(psi)), p_(std::move(p)), convective_(convective) {}

    const std::string& name() const { return name_; }
    double nu() const { return nu_; }
    bool convective() const { return convective_; }

    Vec2 velocity(const Vec2& x) const {
        const auto d = psi_(x);
        return {d.y, -d.x};
    }

    /// L = grad u, L(i,j) = d u_i / d x_j.
    Mat2 gradient(const Vec2& x) const {
        const auto d = psi_(x);
        Mat2 g;
        g << d.xy, d.yy, -d.xx, -d.xy;
        return g;
    }

    double divergence(const Vec2& x) const { return gradient(x).trace(); }

    double pressure(const Vec2& x) const { return p_(x).first; }
    Vec2 pressure_gradient(const Vec2& x) const { return p_(x).second; }

    Vec2 laplacian(const Vec2& x) const {
        const auto d = psi_(x);
        return {d.xxy + d.yyy, -d.xxx - d.xyy};
    }

    Vec2 forcing(const Vec2& x) const {
        Vec2 f = -nu_ * laplacian(x) + pressure_gradient(x);
        if (convective_) f += gradient(x) * velocity(x);
        return f;
    }

    std::function<Vec2(const Vec2&)> velocity_fn() const {
        return [self = *this](const Vec2& x) { return self.velocity(x); };
    }
    std::function<Mat2(const Vec2&)> gradient_fn() const {
        return [self = *this](const Vec2& x) { return self.gradient(x); };
    }
    std::function<double(const Vec2&)> pressure_fn() const {
        return [self = *this](const Vec2& x) { return self.pressure(x); };
    }
    std::function<Vec2(const Vec2&)> forcing_fn(double scale = 1.0) const {
        return [self = *this, scale](const Vec2& x) { return Vec2(scale * self.forcing(x)); };
    }

private:
    std::string name_;
    double nu_;
    StreamFn psi_;
    PressureFn p_;
    bool convective_;
};

/// One-dimensional factor with derivatives 0..3.
using Profile = std::function<std::array<double, 4>(double)>;

inline ManufacturedCase::StreamFn separable_stream(Profile X, Profile Y) {
    return [X, Y](const Vec2& p) {
        const auto a = X(p.x());
        const auto b = Y(p.y());
        StreamDerivatives d;
        d.x = a[1] * b[0];
        d.y = a[0] * b[1];
        d.xx = a[2] * b[0];
        d.xy = a[1] * b[1];
        d.yy = a[0] * b[2];
        d.xxx = a[3] * b[0];
        d.xxy = a[2] * b[1];
        d.xyy = a[1] * b[2];
        d.yyy = a[0] * b[3];
        return d;
    };
}

inline std::array<double, 4> quartic_bump(double t) {
    // t^2 (1-t)^2
    return {t * t * (1 - t) * (1 - t), 2 * t - 6 * t * t + 4 * t * t * t, 2 - 12 * t + 12 * t * t, -12 + 24 * t};
}

inline std::array<double, 4> sine_squared(double t) {
    using std::numbers::pi;
    const double s = std::sin(2 * pi * t), c = std::cos(2 * pi * t);
    return {0.5 * (1 - c), pi * s, 2 * pi * pi * c, -4 * pi * pi * pi * s};
}

inline const std::vector<std::string>& case_names() {
    static const std::vector<std::string> names{"bubble", "gyre"};
    return names;
}

/// Catalog cases on the unit square with homogeneous boundary data.
inline ManufacturedCase manufactured_case(const std::string& name, double nu = 1.0, bool convective = true) {
    using std::numbers::pi;
    if (name == "bubble") {
        return ManufacturedCase(
            name, nu, separable_stream(quartic_bump, quartic_bump),
            [](const Vec2& x) {
                const double sx = std::sin(2 * pi * x.x()), sy = std::sin(2 * pi * x.y());
                const double cx = std::cos(2 * pi * x.x()), cy = std::cos(2 * pi * x.y());
                return std::pair<double, Vec2>{sx * sy, Vec2(2 * pi * cx * sy, 2 * pi * sx * cy)};
            },
            convective);
    }
    if (name == "gyre") {
        return ManufacturedCase(
            name, nu, separable_stream(sine_squared, sine_squared),
            [](const Vec2& x) {
                const double sx = std::sin(pi * x.x()), sy = std::sin(pi * x.y());
                const double cx = std::cos(pi * x.x()), cy = std::cos(pi * x.y());
                return std::pair<double, Vec2>{cx * cy, Vec2(-pi * sx * cy, -pi * cx * sy)};
            },
            convective);
    }
    throw ConfigError("case", "unknown case '" + name + "' (expected bubble or gyre)");
}

/// Bivariate polynomial sum c_ab x^a y^b, total degree <= degree.
class Polynomial2 {
public:
    explicit Polynomial2(int degree = 0) : degree_(degree), c_((degree + 1) * (degree + 1), 0.0) {}

    int degree() const { return degree_; }
    double& coeff(int a, int b) { return c_[a * (degree_ + 1) + b]; }
    double coeff(int a, int b) const { return c_[a * (degree_ + 1) + b]; }

    /// d^(dx+dy) / dx^dx dy^dy evaluated at p.
    double eval(const Vec2& p, int dx = 0, int dy = 0) const {
        double sum = 0.0;
        for (int a = dx; a <= degree_; ++a)
            for (int b = dy; a + b <= degree_; ++b) {
                const double c = coeff(a, b);
                if (c == 0.0) continue;
                sum += c * falling(a, dx) * falling(b, dy) * std::pow(p.x(), a - dx) * std::pow(p.y(), b - dy);
            }
        return sum;
    }

    /// Exact integral over an axis-aligned rectangle.
    double integrate(const Rect& r) const {
        double sum = 0.0;
        for (int a = 0; a <= degree_; ++a)
            for (int b = 0; a + b <= degree_; ++b)
                sum += coeff(a, b) * (std::pow(r.x1, a + 1) - std::pow(r.x0, a + 1)) / (a + 1) *
                       (std::pow(r.y1, b + 1) - std::pow(r.y0, b + 1)) / (b + 1);
        return sum;
    }

    static Polynomial2 random(int degree, std::mt19937_64& rng) {
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        Polynomial2 p(degree);
        for (int a = 0; a <= degree; ++a)
            for (int b = 0; a + b <= degree; ++b) p.coeff(a, b) = dist(rng);
        return p;
    }

private:
    static double falling(int n, int k) {
        double r = 1.0;
        for (int i = 0; i < k; ++i) r *= n - i;
        return r;
    }

    int degree_;
    std::vector<double> c_;
};

/// Random polynomial Stokes solution: u = curl psi with psi of degree velocity_degree+1,
/// p of degree pressure_degree with zero mean over `domain`. Boundary data is inhomogeneous.
inline ManufacturedCase polynomial_case(int velocity_degree, int pressure_degree, double nu, std::uint64_t seed,
                                        const Rect& domain = {}) {
    std::mt19937_64 rng(seed);
    auto psi = std::make_shared<Polynomial2>(Polynomial2::random(velocity_degree + 1, rng));
    auto p = std::make_shared<Polynomial2>(Polynomial2::random(pressure_degree, rng));
    p->coeff(0, 0) -= p->integrate(domain) / ((domain.x1 - domain.x0) * (domain.y1 - domain.y0));
    return ManufacturedCase(
        "polynomial", nu,
        [psi](const Vec2& x) {
            StreamDerivatives d;
            d.x = psi->eval(x, 1, 0);
            d.y = psi->eval(x, 0, 1);
            d.xx = psi->eval(x, 2, 0);
            d.xy = psi->eval(x, 1, 1);
            d.yy = psi->eval(x, 0, 2);
            d.xxx = psi->eval(x, 3, 0);
            d.xxy = psi->eval(x, 2, 1);
            d.xyy = psi->eval(x, 1, 2);
            d.yyy = psi->eval(x, 0, 3);
            return d;
        },
        [p](const Vec2& x) { return std::pair<double, Vec2>{p->eval(x), Vec2(p->eval(x, 1, 0), p->eval(x, 0, 1))}; },
        false);
}

}  // namespace hdgns
