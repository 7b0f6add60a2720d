#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "hdgns/analysis.hpp"
#include "hdgns/manufactured.hpp"
#include "hdgns/solver.hpp"

using namespace hdgns;

namespace {

PolyMesh unit_square() { return PolyMesh::from_loops({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2, 3}}); }

double rel_diff(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

VectorFunction smooth_forcing() {
    return [](const Vec2& x) { return Vec2(std::sin(3 * x.x()) + x.y(), std::cos(2 * x.y()) - x.x() * x.y()); };
}

ConvectionField sample_convection() {
    return ConvectionField::analytic([](const Vec2& x) { return Vec2(1.0 + x.y(), -0.5 + x.x() * x.x()); },
                                     [](const Vec2& x) { return 0.0 * x.x(); });
}

}  // namespace

TEST(Solver, RejectsNonPositiveViscosity) {
    const PolyMesh m = unit_square();
    const SpaceSet s(m, 0);
    EXPECT_THROW(HdgSolver(s, 0.0), ConfigError);
    EXPECT_THROW(HdgSolver(s, -1.0), ConfigError);
}

TEST(Solver, SystemDimensions) {
    const PolyMesh one = unit_square();
    const SpaceSet s0(one, 0);
    const HdgSolver a(s0, 1.0);
    EXPECT_EQ(a.monolithic_size(), 12u);
    EXPECT_EQ(a.assemble_monolithic(ConvectionField::zero(), a.loads(nullptr)).matrix.rows(), 12);

    const PolyMesh m = generate_structured(MeshKind::quad, 2);
    const SpaceSet s1(m, 1);
    const HdgSolver b(s1, 1.0);
    EXPECT_EQ(b.condensed_size(), 21u);
    EXPECT_EQ(b.condense(ConvectionField::zero(), b.loads(nullptr)).system.matrix.rows(), 21);
}

TEST(Solver, ZeroForcingGivesZeroState) {
    const PolyMesh m = generate_structured(MeshKind::hexdom, 3);
    const SpaceSet s(m, 1);
    const HdgSolver solver(s, 1.0);
    for (const SolveMode mode : {SolveMode::monolithic, SolveMode::condensed}) {
        const HDGState st = solver.solve_oseen(ConvectionField::zero(), VectorFunction{}, mode);
        EXPECT_LT(st.cells.norm(), 1e-14);
        EXPECT_LT(st.traces.norm(), 1e-14);
        EXPECT_LT(std::abs(st.multiplier), 1e-14);
    }
}

TEST(Solver, PackUnpackRoundTrip) {
    const PolyMesh m = generate_structured(MeshKind::tri, 2);
    const SpaceSet s(m, 1);
    const HdgSolver solver(s, 1.0);
    std::mt19937_64 rng(1);
    HDGState st = random_state(s, rng, true);
    st.multiplier = 0.25;
    const HDGState back = solver.unpack(solver.pack(st));
    EXPECT_EQ((back.cells - st.cells).norm(), 0.0);
    EXPECT_EQ((back.traces - st.traces).norm(), 0.0);
    EXPECT_EQ(back.multiplier, 0.25);
}

TEST(Solver, MonolithicMatchesDenseOracle) {
    const PolyMesh m = generate_structured(MeshKind::hexdom, 2);
    const SpaceSet s(m, 1);
    const HdgSolver solver(s, 0.7);
    const auto load = solver.loads(smooth_forcing());
    const LinearSystem sys = solver.assemble_monolithic(sample_convection(), load);
    const Matrix dense(sys.matrix);
    const Vector oracle = dense.fullPivLu().solve(sys.rhs);
    const Vector x = HdgSolver::sparse_solve(sys);
    EXPECT_LT(rel_diff(x, oracle), 1e-10);
}

TEST(Solver, CondensedEqualsMonolithicSingleCell) {
    const PolyMesh m = unit_square();
    for (int k = 0; k <= 2; ++k) {
        const SpaceSet s(m, k);
        HdgSolver solver(s, 1.0);
        solver.set_dirichlet([](const Vec2& x) { return Vec2(x.y(), -x.x()); });
        const auto load = solver.loads(smooth_forcing());
        const HDGState a = solver.solve_oseen(ConvectionField::zero(), load, SolveMode::monolithic);
        const HDGState b = solver.solve_oseen(ConvectionField::zero(), load, SolveMode::condensed);
        EXPECT_LT(rel_diff(b.cells, a.cells), 1e-10) << "k=" << k;
        EXPECT_LT(rel_diff(b.traces, a.traces), 1e-12);
    }
}

TEST(Solver, CondensedEqualsMonolithicRandomOseen) {
    std::mt19937_64 rng(42);
    for (const MeshKind kind : {MeshKind::tri, MeshKind::hexdom}) {
        const PolyMesh m = generate_structured(kind, 3);
        for (int k = 0; k <= 2; ++k) {
            const SpaceSet s(m, k);
            HdgSolver solver(s, 0.5);
            solver.set_dirichlet([](const Vec2& x) { return Vec2(x.x() * x.y(), 1.0 - x.y()); });
            const HDGState w = random_convection(s, rng, false);
            const ConvectionField conv = ConvectionField::discrete(w);
            const auto load = solver.loads(smooth_forcing());
            const HDGState a = solver.solve_oseen(conv, load, SolveMode::monolithic);
            const HDGState b = solver.solve_oseen(conv, load, SolveMode::condensed);
            EXPECT_LT(rel_diff(b.cells, a.cells), 1e-9);
            EXPECT_LT(rel_diff(b.traces, a.traces), 1e-9);
        }
    }
}

TEST(Solver, InvariantsHoldAfterSolve) {
    const PolyMesh m = generate_structured(MeshKind::hexdom, 4);
    const SpaceSet s(m, 1);
    HdgSolver solver(s, 0.3);
    solver.set_dirichlet([](const Vec2& x) { return Vec2(std::sin(x.y()), std::cos(x.x())); });
    const auto load = solver.loads(smooth_forcing());
    const ConvectionField conv = sample_convection();
    const HDGState st = solver.solve_oseen(conv, load, SolveMode::condensed);
    const InvariantReport rep = solver.check_invariants(st, conv, load);
    EXPECT_LE(rep.pressure_mean, 1e-10);
    EXPECT_LE(rep.residual, 1e-9);
    EXPECT_TRUE(rep.pass());
    // trace flux vanishes only for data with zero net boundary flux
    HdgSolver closed(s, 0.3);
    const HDGState st2 = closed.solve_oseen(conv, load, SolveMode::condensed);
    EXPECT_LE(closed.max_trace_flux(st2), 1e-10);
    // boundary traces hold Pi_M g
    for (Index f : m.boundary_faces()) EXPECT_EQ((st.uhat(f) - solver.boundary_traces().segment(f * s.face_size(), s.face_size())).norm(), 0.0);
}

class PatchTest : public ::testing::TestWithParam<std::tuple<MeshKind, int, int>> {};

TEST_P(PatchTest, ReproducesPolynomialStokes) {
    // u in P_{k+extra}, p in P_k, inhomogeneous Dirichlet data: the discrete solution is exact
    const auto [kind, k, extra] = GetParam();
    const PolyMesh m = generate_structured(kind, 3);
    const SpaceSet s(m, k);
    const ManufacturedCase mc = polynomial_case(k + extra, k, 0.7, 1234 + k);
    HdgSolver solver(s, mc.nu());
    solver.set_dirichlet(mc.velocity_fn());
    const auto load = solver.loads(mc.forcing_fn());
    const HDGState st = solver.solve_oseen(ConvectionField::zero(), load, SolveMode::condensed);
    const ErrorRecord e = errors_against_exact(st, mc);
    EXPECT_LE(e.L, 1e-9);
    EXPECT_LE(e.u, 1e-9);
    EXPECT_LE(e.u_1h, 1e-9);
    EXPECT_LE(e.p, 1e-9);
    // u|_F is not in M_h when extra = 1; the trace then equals Pi_M u
    if (extra == 0) EXPECT_LE(e.triple, 1e-9);
    const HDGState proj = project_exact(s, ExactFields::of(mc));
    EXPECT_LE((st.traces - proj.traces).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_TRUE(solver.check_invariants(st, ConvectionField::zero(), load).pass());
}

INSTANTIATE_TEST_SUITE_P(KindsDegrees, PatchTest,
                         ::testing::Combine(::testing::Values(MeshKind::tri, MeshKind::quad, MeshKind::hexdom),
                                            ::testing::Values(0, 1, 2), ::testing::Values(0, 1)));

TEST(Picard, ZeroForcingConvergesImmediately) {
    const PolyMesh m = generate_structured(MeshKind::quad, 3);
    const SpaceSet s(m, 1);
    const HdgSolver solver(s, 1.0);
    const PicardResult r = solver.picard_solve(VectorFunction{});
    EXPECT_TRUE(r.trace.converged);
    EXPECT_EQ(r.trace.iterations, 1);
    EXPECT_EQ(r.state.cells.norm(), 0.0);
}

TEST(Picard, RejectsNonPositiveTolerance) {
    const PolyMesh m = generate_structured(MeshKind::quad, 2);
    const SpaceSet s(m, 1);
    const HdgSolver solver(s, 1.0);
    EXPECT_THROW(solver.picard_solve(smooth_forcing(), {0.0, 10, SolveMode::condensed}), ConfigError);
    EXPECT_THROW(solver.picard_solve(smooth_forcing(), {-1e-3, 10, SolveMode::condensed}), ConfigError);
}

TEST(Picard, ReportsNonConvergence) {
    const PolyMesh m = generate_structured(MeshKind::quad, 3);
    const SpaceSet s(m, 1);
    const HdgSolver solver(s, 1.0);
    try {
        solver.picard_solve(smooth_forcing(), {1e-10, 1, SolveMode::condensed});
        FAIL() << "expected PicardError";
    } catch (const PicardError& e) {
        EXPECT_EQ(e.trace().iterations, 1);
        EXPECT_FALSE(e.trace().converged);
        ASSERT_EQ(e.trace().increments.size(), 1u);
        EXPECT_GT(e.trace().increments[0], 0.0);
    }
}

TEST(Picard, FirstIterateIsStokes) {
    const PolyMesh m = generate_structured(MeshKind::tri, 2);
    const SpaceSet s(m, 1);
    const HdgSolver solver(s, 1.0);
    const auto f = smooth_forcing();
    const HDGState stokes = solver.solve_oseen(ConvectionField::zero(), f, SolveMode::condensed);
    try {
        solver.picard_solve(f, {1e-10, 1, SolveMode::condensed});
    } catch (const PicardError& e) {
        EXPECT_NEAR(e.trace().increments[0], triple_norm_1h(stokes), 1e-12 * triple_norm_1h(stokes));
    }
}

TEST(Picard, ConvergedStateSolvesNavierStokes) {
    const PolyMesh m = generate_structured(MeshKind::hexdom, 4);
    const SpaceSet s(m, 1);
    const ManufacturedCase mc = manufactured_case("bubble", 1.0, true);
    const HdgSolver solver(s, 1.0);
    for (const SolveMode mode : {SolveMode::monolithic, SolveMode::condensed}) {
        const PicardResult r = solver.picard_solve(mc.forcing_fn(), {1e-10, 30, mode});
        EXPECT_TRUE(r.trace.converged);
        EXPECT_LE(r.trace.iterations, 10);
        for (double ratio : r.trace.ratios) EXPECT_LT(ratio, 1.0);
        const auto load = solver.loads(mc.forcing_fn());
        const InvariantReport rep = solver.check_invariants(r.state, ConvectionField::discrete(r.state), load);
        EXPECT_TRUE(rep.pass()) << rep.pressure_mean << " " << rep.max_trace_flux << " " << rep.residual;
        EXPECT_EQ(r.trace.stability.size(), static_cast<std::size_t>(r.trace.iterations));
    }
}
