#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hdgns/forms.hpp"
#include "hdgns/mesh.hpp"
#include "hdgns/quadrature.hpp"
#include "hdgns/spaces.hpp"

using namespace hdgns;

namespace {

Vector random_vector(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Vector v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

// Local pieces of a local vector in LocalLayout order.
struct Local {
    const SpaceSet& s;
    Index c;
    LocalLayout lay;
    const Vector& x;

    Local(const SpaceSet& s_, Index c_, const Vector& x_) : s(s_), c(c_), lay(s_, c_), x(x_) {}

    Vec2 u(const Vec2& p) const { return eval_velocity(s, c, x.segment(lay.offset(LocalField::u), lay.v), p); }
    Mat2 grad_u(const Vec2& p) const {
        return eval_velocity_gradient(s, c, x.segment(lay.offset(LocalField::u), lay.v), p);
    }
    double pr(const Vec2& p) const { return eval_scalar(s, c, x.segment(lay.offset(LocalField::p), lay.q), p); }
    Vec2 uhat(std::size_t j, const Vec2& p) const {
        return eval_trace(s, s.mesh().cell_faces(c)[j].face, x.segment(lay.face_offset(j), lay.face), p);
    }
};

// Convecting field used by the oracle tests: quadratic, not divergence free.
Vec2 w_fn(const Vec2& x) { return {1.0 + x.x() * x.y() - 0.5 * x.y(), -0.7 + x.x() * x.x() + 0.3 * x.y()}; }
double div_w_fn(const Vec2& x) { return x.y() + 0.3; }
Vec2 what_fn(const Vec2& x) { return w_fn(x) + Vec2(0.2 * x.y(), -0.1); }

}  // namespace

TEST(Forms, TauC) {
    EXPECT_EQ(tau_c(0.5), 0.5);
    EXPECT_EQ(tau_c(-1.0), 0.0);
    EXPECT_EQ(tau_c(0.0), 0.0);
}

TEST(Forms, LayoutOffsets) {
    const PolyMesh m = generate_structured(MeshKind::hexdom, 2);
    const SpaceSet s(m, 1);
    for (Index c = 0; c < m.num_cells(); ++c) {
        const LocalLayout lay(s, c);
        EXPECT_EQ(lay.cell_size(), s.cell_size());
        EXPECT_EQ(lay.size(), s.cell_size() + m.cell_faces(c).size() * s.face_size());
        EXPECT_EQ(lay.offset(LocalField::p), 24u);
        EXPECT_EQ(lay.face_offset(1), 27u + 4u);
    }
}

TEST(Forms, LBlockIsIdentity) {
    const PolyMesh sq = PolyMesh::from_loops({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2, 3}});
    const SpaceSet s0(sq, 0);
    const LocalBlocks b0 = local_S_blocks(s0, 0, 1.0);
    EXPECT_LT((Matrix(b0.block(LocalField::L, LocalField::L)) - Matrix::Identity(4, 4)).norm(), 1e-14);

    const PolyMesh m = generate_structured(MeshKind::hexdom, 2);
    const SpaceSet s(m, 2);
    for (Index c = 0; c < m.num_cells(); ++c) {
        const LocalBlocks b = local_S_blocks(s, c, 0.3);
        EXPECT_LT((Matrix(b.block(LocalField::L, LocalField::L)) - Matrix::Identity(24, 24)).cwiseAbs().maxCoeff(),
                  1e-10);
    }
}

TEST(Forms, VelocityPressureBlocksAntisymmetric) {
    const PolyMesh m = generate_structured(MeshKind::tri, 2);
    const SpaceSet s(m, 1);
    for (Index c = 0; c < m.num_cells(); ++c) {
        const LocalBlocks b = local_S_blocks(s, c, 2.0);
        EXPECT_LT((Matrix(b.block(LocalField::u, LocalField::p)) + Matrix(b.block(LocalField::p, LocalField::u)).transpose())
                      .norm(),
                  1e-12);
        EXPECT_LT((Matrix(b.block(LocalField::trace, LocalField::p)) +
                   Matrix(b.block(LocalField::p, LocalField::trace)).transpose())
                      .norm(),
                  1e-12);
        EXPECT_EQ(Matrix(b.block(LocalField::p, LocalField::p)).norm(), 0.0);
    }
}

TEST(Forms, StabilizationVanishesOnMatchingConstants) {
    const PolyMesh m = generate_structured(MeshKind::hexdom, 2);
    const SpaceSet s(m, 1);
    const Vec2 a(0.7, -1.3);
    for (Index c = 0; c < m.num_cells(); ++c) {
        const LocalLayout lay(s, c);
        Vector x = Vector::Zero(lay.size());
        x.segment(lay.offset(LocalField::u), lay.v) = project_cell(s, Space::V, c, [&](const Vec2&) { return a; });
        for (std::size_t j = 0; j < lay.faces; ++j)
            x.segment(lay.face_offset(j), lay.face) =
                project_face(s, m.cell_faces(c)[j].face, [&](const Vec2&) { return a; });
        const Vector r = local_S_blocks(s, c, 1.5).matrix * x;
        EXPECT_LT(r.norm(), 1e-12);
    }
}

TEST(Forms, EnergyIdentity) {
    // S((L,u,p,uhat), (nu L, u, p, uhat)) = nu |L|^2 + sum_F nu/h_K |Pi_M u - uhat|_F^2
    std::mt19937_64 rng(7);
    for (const MeshKind kind : {MeshKind::tri, MeshKind::quad, MeshKind::hexdom}) {
        const PolyMesh m = generate_structured(kind, 2);
        for (int k = 0; k <= 2; ++k) {
            const SpaceSet s(m, k);
            const double nu = 0.37;
            for (Index c = 0; c < m.num_cells(); ++c) {
                const LocalLayout lay(s, c);
                const Vector x = random_vector(lay.size(), rng);
                Vector y = x;
                y.head(lay.g) *= nu;
                const double lhs = y.dot(local_S_blocks(s, c, nu).matrix * x);

                const Local loc(s, c, x);
                double rhs = nu * x.head(lay.g).squaredNorm();
                for (std::size_t j = 0; j < lay.faces; ++j) {
                    const Index f = m.cell_faces(c)[j].face;
                    const Vector pu = project_face(s, f, [&](const Vec2& p) { return loc.u(p); });
                    const QuadRule r = face_quadrature(m, f, 2 * k + 2);
                    for (std::size_t q = 0; q < r.size(); ++q) {
                        const Vec2 diff = eval_trace(s, f, pu, r.points[q]) - loc.uhat(j, r.points[q]);
                        rhs += nu / m.cell_diameter(c) * r.weights[q] * diff.squaredNorm();
                    }
                }
                EXPECT_NEAR(lhs, rhs, 1e-10 * (1.0 + std::abs(rhs)));
            }
        }
    }
}

TEST(Forms, SMatchesQuadratureOracle) {
    // direct evaluation of S(x, y) from its integral definition
    std::mt19937_64 rng(11);
    const PolyMesh m = generate_structured(MeshKind::hexdom, 2, Rect{0, 0, 2, 1});
    const int k = 1;
    const SpaceSet s(m, k);
    const double nu = 0.8;
    for (Index c = 0; c < m.num_cells(); ++c) {
        const LocalLayout lay(s, c);
        const Vector x = random_vector(lay.size(), rng), y = random_vector(lay.size(), rng);
        const Local X(s, c, x), Y(s, c, y);
        auto tensor = [&](const Vector& v, const Vec2& p) { return eval_tensor(s, c, v.head(lay.g), p); };
        auto div_tensor = [&](const Vector& v, const Vec2& p) {
            const auto g = s.cell_basis(c).eval_grad(p);
            const std::size_t n = s.modes_k();
            Vec2 d;
            for (int i = 0; i < 2; ++i)
                d[i] = g.col(0).head(n).dot(v.segment((2 * i) * n, n)) + g.col(1).head(n).dot(v.segment((2 * i + 1) * n, n));
            return d;
        };
        auto grad_q = [&](const Vector& v, const Vec2& p) {
            const auto g = s.cell_basis(c).eval_grad(p);
            const std::size_t n = s.modes_k();
            const auto pv = v.segment(lay.offset(LocalField::p), n);
            return Vec2(g.col(0).head(n).dot(pv), g.col(1).head(n).dot(pv));
        };
        double val = 0.0;
        const QuadRule r = cell_quadrature(m, c, 3 * k + 4);
        for (std::size_t q = 0; q < r.size(); ++q) {
            const Vec2& p = r.points[q];
            const Mat2 L = tensor(x, p), G = tensor(y, p);
            val += r.weights[q] * ((L.array() * G.array()).sum() + X.u(p).dot(div_tensor(y, p)) -
                                   nu * Y.u(p).dot(div_tensor(x, p)) - X.u(p).dot(grad_q(y, p)) +
                                   Y.u(p).dot(grad_q(x, p)));
        }
        for (std::size_t j = 0; j < lay.faces; ++j) {
            const Index f = m.cell_faces(c)[j].face;
            const Vec2 n = m.outward_normal(c, j);
            const Vector pu = project_face(s, f, [&](const Vec2& p) { return X.u(p); });
            const QuadRule rf = face_quadrature(m, f, 3 * k + 4);
            for (std::size_t q = 0; q < rf.size(); ++q) {
                const Vec2& p = rf.points[q];
                const Mat2 L = tensor(x, p), G = tensor(y, p);
                const Vec2 uh = X.uhat(j, p), mu = Y.uhat(j, p);
                const double h = m.cell_diameter(c);
                val += rf.weights[q] * (-uh.dot(G * n) + nu * mu.dot(L * n) + uh.dot(n) * Y.pr(p) - mu.dot(n) * X.pr(p) +
                                        nu / h * (eval_trace(s, f, pu, p) - uh).dot(Y.u(p) - mu));
            }
        }
        const double got = y.dot(local_S_blocks(s, c, nu).matrix * x);
        EXPECT_NEAR(got, val, 1e-11 * (1.0 + std::abs(val)));
    }
}

TEST(Forms, ConvectionZeroField) {
    const PolyMesh m = generate_structured(MeshKind::quad, 2);
    const SpaceSet s(m, 1);
    for (Index c = 0; c < m.num_cells(); ++c) EXPECT_EQ(local_O_blocks(s, c, ConvectionField::zero()).matrix.norm(), 0.0);
    EXPECT_TRUE(ConvectionField::zero().is_zero());
    EXPECT_TRUE(ConvectionField::analytic(w_fn, div_w_fn).trace_is_restriction());
    EXPECT_FALSE(ConvectionField::analytic(w_fn, div_w_fn, what_fn).trace_is_restriction());
}

TEST(Forms, ConvectionMatchesQuadratureOracle) {
    // direct evaluation of O((w, what); x, y) with a trace differing from w
    std::mt19937_64 rng(3);
    const PolyMesh m = generate_structured(MeshKind::hexdom, 2);
    const int k = 1;
    const SpaceSet s(m, k);
    const ConvectionField conv = ConvectionField::analytic(w_fn, div_w_fn, what_fn);
    for (Index c = 0; c < m.num_cells(); ++c) {
        const LocalLayout lay(s, c);
        const Vector x = random_vector(lay.size(), rng), y = random_vector(lay.size(), rng);
        const Local X(s, c, x), Y(s, c, y);
        double val = 0.0;
        const QuadRule r = cell_quadrature(m, c, s.high_order());
        for (std::size_t q = 0; q < r.size(); ++q) {
            const Vec2& p = r.points[q];
            const Vec2 u = X.u(p), v = Y.u(p), w = w_fn(p);
            // (u (x) w) : grad v = sum_ij u_i w_j d_j v_i
            val += r.weights[q] * (-u.dot(Y.grad_u(p) * w) - 0.5 * div_w_fn(p) * u.dot(v));
        }
        for (std::size_t j = 0; j < lay.faces; ++j) {
            const Index f = m.cell_faces(c)[j].face;
            const Vec2 n = m.outward_normal(c, j);
            const QuadRule rf = face_quadrature(m, f, s.high_order());
            for (std::size_t q = 0; q < rf.size(); ++q) {
                const Vec2& p = rf.points[q];
                const Vec2 u = X.u(p), v = Y.u(p), uh = X.uhat(j, p), mu = Y.uhat(j, p);
                const double wn = what_fn(p).dot(n);
                val += rf.weights[q] * (0.5 * (w_fn(p) - what_fn(p)).dot(n) * u.dot(v) +
                                        std::max(wn, 0.0) * (u - uh).dot(v - mu) + wn * uh.dot(v - mu));
            }
        }
        const double got = y.dot(local_O_blocks(s, c, conv).matrix * x);
        EXPECT_NEAR(got, val, 1e-11 * (1.0 + std::abs(val)));
    }
}

TEST(Forms, ConvectionDiscreteMatchesAnalyticOfSameField) {
    // a discrete state whose velocity and traces are the projections of a P_1 field
    const PolyMesh m = generate_structured(MeshKind::tri, 2);
    const SpaceSet s(m, 1);
    auto w = [](const Vec2& x) { return Vec2(0.5 + x.y(), x.x() - 0.25); };
    HDGState st = HDGState::zero(s);
    for (Index c = 0; c < m.num_cells(); ++c) st.u(c) = project_cell(s, Space::V, c, w);
    for (Index f = 0; f < m.num_faces(); ++f) st.uhat(f) = project_face(s, f, w);
    const ConvectionField a = ConvectionField::analytic(w, [](const Vec2&) { return 0.0; });
    const ConvectionField d = ConvectionField::discrete(st);
    for (Index c = 0; c < m.num_cells(); ++c)
        EXPECT_LT((local_O_blocks(s, c, a).matrix - local_O_blocks(s, c, d).matrix).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Forms, ConvectionCoercivityIdentity) {
    // with single-valued traces: sum_K O(w; x, x)
    //   = sum_K 1/2 <|what.n| (u - uhat), u - uhat>_dK - 1/2 <what.n, |uhat|^2>_dOmega
    std::mt19937_64 rng(5);
    const PolyMesh m = generate_structured(MeshKind::hexdom, 3);
    for (int k = 0; k <= 2; ++k) {
        const SpaceSet s(m, k);
        const ConvectionField conv = ConvectionField::analytic(w_fn, div_w_fn);
        const Vector traces = random_vector(s.num_trace_dofs(), rng);
        double form = 0.0, expected = 0.0;
        for (Index c = 0; c < m.num_cells(); ++c) {
            const LocalLayout lay(s, c);
            Vector x = random_vector(lay.size(), rng);
            for (std::size_t j = 0; j < lay.faces; ++j)
                x.segment(lay.face_offset(j), lay.face) = traces.segment(m.cell_faces(c)[j].face * s.face_size(), s.face_size());
            form += x.dot(local_O_blocks(s, c, conv).matrix * x);
            const Local X(s, c, x);
            for (std::size_t j = 0; j < lay.faces; ++j) {
                const Index f = m.cell_faces(c)[j].face;
                const Vec2 n = m.outward_normal(c, j);
                const auto& fd = s.face_high(f);
                for (std::size_t q = 0; q < fd.rule.size(); ++q) {
                    const Vec2& p = fd.rule.points[q];
                    const double wn = w_fn(p).dot(n);
                    const Vec2 uh = X.uhat(j, p);
                    expected += fd.rule.weights[q] * 0.5 * std::abs(wn) * (X.u(p) - uh).squaredNorm();
                    if (m.face(f).is_boundary()) expected -= fd.rule.weights[q] * 0.5 * wn * uh.squaredNorm();
                }
            }
        }
        EXPECT_NEAR(form, expected, 1e-10 * (1.0 + std::abs(expected))) << "k=" << k;
    }
}

TEST(Forms, ConvectionNonnegativeWithZeroBoundaryTraces) {
    std::mt19937_64 rng(9);
    const PolyMesh m = generate_structured(MeshKind::quad, 3);
    const SpaceSet s(m, 1);
    const ConvectionField conv = ConvectionField::analytic(w_fn, div_w_fn);
    for (int trial = 0; trial < 20; ++trial) {
        Vector traces = random_vector(s.num_trace_dofs(), rng);
        for (Index f : m.boundary_faces()) traces.segment(f * s.face_size(), s.face_size()).setZero();
        double form = 0.0;
        for (Index c = 0; c < m.num_cells(); ++c) {
            const LocalLayout lay(s, c);
            Vector x = random_vector(lay.size(), rng);
            for (std::size_t j = 0; j < lay.faces; ++j)
                x.segment(lay.face_offset(j), lay.face) = traces.segment(m.cell_faces(c)[j].face * s.face_size(), s.face_size());
            form += x.dot(local_O_blocks(s, c, conv).matrix * x);
        }
        EXPECT_GE(form, -1e-10);
    }
}

TEST(Forms, LoadZeroAndConstant) {
    const PolyMesh m = generate_structured(MeshKind::hexdom, 2);
    const SpaceSet s(m, 1);
    const std::size_t n = s.modes_k1();
    for (Index c = 0; c < m.num_cells(); ++c) {
        EXPECT_EQ(local_load(s, c, [](const Vec2&) { return Vec2(0.0, 0.0); }).norm(), 0.0);
        const Vector b = local_load(s, c, [](const Vec2&) { return Vec2(2.0, -1.0); });
        const double root = std::sqrt(m.cell_area(c));
        EXPECT_NEAR(b[0], 2.0 * root, 1e-12);
        EXPECT_NEAR(b[n], -1.0 * root, 1e-12);
        for (std::size_t i = 1; i < n; ++i) {
            EXPECT_NEAR(b[i], 0.0, 1e-12);
            EXPECT_NEAR(b[n + i], 0.0, 1e-12);
        }
    }
}

TEST(Forms, LoadOfGradientMatchesPressurePairing) {
    // (grad p, v)_K = -(p, div v)_K + <p, v.n>_dK
    auto p = [](const Vec2& x) { return std::sin(x.x()) * std::exp(x.y()); };
    auto grad_p = [](const Vec2& x) {
        return Vec2(std::cos(x.x()) * std::exp(x.y()), std::sin(x.x()) * std::exp(x.y()));
    };
    const PolyMesh m = generate_structured(MeshKind::hexdom, 2);
    const SpaceSet s(m, 2);
    const std::size_t n = s.modes_k1();
    for (Index c = 0; c < m.num_cells(); ++c) {
        const Vector b = local_load(s, c, grad_p);
        Vector expect = Vector::Zero(2 * n);
        const QuadRule r = cell_quadrature(m, c, 24);
        for (std::size_t q = 0; q < r.size(); ++q) {
            const auto g = s.cell_basis(c).eval_grad(r.points[q]);
            expect.head(n) -= r.weights[q] * p(r.points[q]) * g.col(0);
            expect.tail(n) -= r.weights[q] * p(r.points[q]) * g.col(1);
        }
        for (std::size_t j = 0; j < m.cell_faces(c).size(); ++j) {
            const Vec2 nn = m.outward_normal(c, j);
            const QuadRule rf = face_quadrature(m, m.cell_faces(c)[j].face, 24);
            for (std::size_t q = 0; q < rf.size(); ++q) {
                const Vector phi = s.cell_basis(c).eval(rf.points[q]);
                expect.head(n) += rf.weights[q] * p(rf.points[q]) * nn.x() * phi;
                expect.tail(n) += rf.weights[q] * p(rf.points[q]) * nn.y() * phi;
            }
        }
        EXPECT_LT((b - expect).cwiseAbs().maxCoeff(), 1e-10);
    }
}
