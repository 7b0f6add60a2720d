#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hdgns/manufactured.hpp"
#include "hdgns/mesh.hpp"
#include "hdgns/norms.hpp"
#include "hdgns/solver.hpp"
#include "hdgns/spaces.hpp"
#include "hdgns/state.hpp"

namespace hdgns {

/// Error norms of a discrete state against an exact solution.
struct ErrorRecord {
    double L = 0.0;       // ||L - L_h||
    double u = 0.0;       // ||u - u_h||
    double u_1h = 0.0;    // ||u - u_h||_{1,h}
    double p = 0.0;       // ||p - p_h||
    double triple = 0.0;  // |||(u - u_h, u|_F - uhat_h)|||_{1,h}

    static constexpr std::size_t count = 5;
    static const std::array<const char*, count>& names() {
        static const std::array<const char*, count> n{"err_L", "err_u", "err_u_1h", "err_p", "err_triple"};
        return n;
    }
    std::array<double, count> values() const { return {L, u, u_1h, p, triple}; }
};

/// Exact solution fields used for error measurement.
struct ExactFields {
    std::function<Vec2(const Vec2&)> u;
    std::function<Mat2(const Vec2&)> grad_u;
    std::function<double(const Vec2&)> p;

    static ExactFields of(const ManufacturedCase& mc) { return {mc.velocity_fn(), mc.gradient_fn(), mc.pressure_fn()}; }
};

/// Local index of face f in cell c.
inline std::size_t local_face_index(const PolyMesh& mesh, Index c, Index f) {
    const auto faces = mesh.cell_faces(c);
    for (std::size_t j = 0; j < faces.size(); ++j)
        if (faces[j].face == f) return j;
    throw std::out_of_range("face is not on the cell boundary");
}

/// Errors against an exact solution, integrated with the SpaceSet's high-order rules.
/// The discrete-H1 error uses face averages of u - u_h (zero jump on the boundary);
/// the triple column compares the trace with u|_F.
inline ErrorRecord errors_against_exact(const HDGState& st, const ExactFields& ex) {
    const SpaceSet& s = *st.spaces;
    const PolyMesh& mesh = s.mesh();
    const std::size_t nk = s.modes_k(), nk1 = s.modes_k1(), m = s.face_size_per_component();
    double eL = 0, eu = 0, egrad = 0, ep = 0, ejump = 0, etrace = 0;

    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto& d = s.cell_high(c);
        const auto L = st.L(c);
        const auto u = st.u(c);
        const auto p = st.p(c);
        const Matrix Lh = d.phi.leftCols(nk) * L.reshaped(nk, 4);  // points x 4
        const Matrix uh = d.phi * u.reshaped(nk1, 2);
        const Matrix gx = d.dphi_x * u.reshaped(nk1, 2);
        const Matrix gy = d.dphi_y * u.reshaped(nk1, 2);
        const Vector ph = d.phi.leftCols(nk) * p;
        for (std::size_t q = 0; q < d.rule.size(); ++q) {
            const Vec2& x = d.rule.points[q];
            const double w = d.rule.weights[q];
            const Mat2 G = ex.grad_u(x);
            const Vec2 U = ex.u(x);
            const double P = ex.p(x);
            eL += w * (std::pow(G(0, 0) - Lh(q, 0), 2) + std::pow(G(0, 1) - Lh(q, 1), 2) +
                       std::pow(G(1, 0) - Lh(q, 2), 2) + std::pow(G(1, 1) - Lh(q, 3), 2));
            eu += w * (std::pow(U[0] - uh(q, 0), 2) + std::pow(U[1] - uh(q, 1), 2));
            egrad += w * (std::pow(G(0, 0) - gx(q, 0), 2) + std::pow(G(0, 1) - gy(q, 0), 2) +
                          std::pow(G(1, 0) - gx(q, 1), 2) + std::pow(G(1, 1) - gy(q, 1), 2));
            ep += w * std::pow(P - ph[q], 2);
        }
        const double hinv = 1.0 / mesh.cell_diameter(c);
        const auto faces = mesh.cell_faces(c);
        for (std::size_t j = 0; j < faces.size(); ++j) {
            const Index f = faces[j].face;
            const auto& fd = s.face_high(f);
            const Matrix uc = s.cell_on_face_high(c, j) * u.reshaped(nk1, 2);
            const Matrix th = fd.psi * st.uhat(f).reshaped(m, 2);
            const Face& face = mesh.face(f);
            Matrix uo;
            if (!face.is_boundary()) {
                const Index other = face.left == c ? face.right : face.left;
                uo = s.cell_on_face_high(other, local_face_index(mesh, other, f)) * st.u(other).reshaped(nk1, 2);
            }
            for (std::size_t q = 0; q < fd.rule.size(); ++q) {
                const double w = fd.rule.weights[q];
                // (u - u_h) - (u - uhat_h): the exact field cancels
                etrace += hinv * w * (std::pow(th(q, 0) - uc(q, 0), 2) + std::pow(th(q, 1) - uc(q, 1), 2));
                if (!face.is_boundary())
                    ejump += hinv * w * 0.25 * (std::pow(uc(q, 0) - uo(q, 0), 2) + std::pow(uc(q, 1) - uo(q, 1), 2));
            }
        }
    }
    return {std::sqrt(eL), std::sqrt(eu), std::sqrt(egrad + ejump), std::sqrt(ep), std::sqrt(egrad + etrace)};
}

inline ErrorRecord errors_against_exact(const HDGState& st, const ManufacturedCase& mc) {
    return errors_against_exact(st, ExactFields::of(mc));
}

/// State holding the L2 projections of an exact solution (trace = Pi_M u).
inline HDGState project_exact(const SpaceSet& s, const ExactFields& ex) {
    HDGState st = HDGState::zero(s);
    for (std::size_t c = 0; c < s.mesh().num_cells(); ++c) {
        st.L(c) = project_cell(s, Space::G, c, ex.grad_u);
        st.u(c) = project_cell(s, Space::V, c, ex.u);
        st.p(c) = project_cell(s, Space::Q, c, ex.p);
    }
    for (std::size_t f = 0; f < s.mesh().num_faces(); ++f) st.uhat(f) = project_face(s, f, ex.u);
    return st;
}

/// ||L_h||, (sum_K h_K^{-1} ||Pi_M u_h - uhat_h||^2_dK)^{1/2}.
inline std::pair<double, double> lifting_terms(const HDGState& st) {
    const SpaceSet& s = *st.spaces;
    const PolyMesh& mesh = s.mesh();
    const std::size_t nk = s.modes_k(), nk1 = s.modes_k1(), m = s.face_size_per_component();
    double lsum = 0.0, jsum = 0.0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto& d = s.cell_linear(c);
        const Eigen::Map<const Vector> w(d.rule.weights.data(), d.rule.size());
        const Matrix Lh = d.phi.leftCols(nk) * st.L(c).reshaped(nk, 4);
        lsum += w.dot(Lh.rowwise().squaredNorm());
        const double hinv = 1.0 / mesh.cell_diameter(c);
        const auto faces = mesh.cell_faces(c);
        for (std::size_t j = 0; j < faces.size(); ++j) {
            const auto& fd = s.face_linear(faces[j].face);
            const Eigen::Map<const Vector> wf(fd.rule.weights.data(), fd.rule.size());
            const Matrix uc = s.cell_on_face_linear(c, j) * st.u(c).reshaped(nk1, 2);
            // face modes are orthonormal, so Pi_M has coefficients psi^T W u
            const Matrix proj = fd.psi.transpose() * wf.asDiagonal() * uc;
            const Matrix diff = proj - st.uhat(faces[j].face).reshaped(m, 2);
            jsum += hinv * diff.squaredNorm();
        }
    }
    return {std::sqrt(lsum), std::sqrt(jsum)};
}

/// |||(u_h, uhat_h)|||_{1,h} / (||L_h|| + (sum_K h_K^{-1} ||Pi_M u_h - uhat_h||^2_dK)^{1/2}).
inline double lifting_ratio(const HDGState& st) {
    const auto [l, j] = lifting_terms(st);
    const double den = l + j;
    return den > 0.0 ? triple_norm_1h(st) / den : 0.0;
}

/// nu |||(u_h, uhat_h)|||_{1,h} / ||f||.
inline double stability_monitor(const HDGState& st, double nu, double f_norm) {
    return f_norm > 0.0 ? nu * triple_norm_1h(st) / f_norm : 0.0;
}

inline double forcing_norm(const PolyMesh& mesh, const std::function<Vec2(const Vec2&)>& f, int order) {
    return l2_norm(mesh, analytic_field(f, [](const Vec2&) { return Mat2(Mat2::Zero()); }), order);
}

/// Errors at or below this are treated as exact and get no EOC.
inline constexpr double exact_threshold = 1e-13;

/// log(e0/e1)/log(h0/h1), or nullopt when either error is at round-off level.
inline std::optional<double> eoc(double e0, double e1, double h0, double h1) {
    if (!(e0 > exact_threshold) || !(e1 > exact_threshold)) return std::nullopt;
    return std::log(e0 / e1) / std::log(h0 / h1);
}

struct StudyRow {
    std::size_t level = 0;
    double h_max = 0.0;
    std::size_t cells = 0;
    std::size_t dofs = 0;  // condensed system size
    ErrorRecord errors;
    bool has_errors = true;
    int picard_iterations = 0;
    double stability = 0.0;
    double lifting = 0.0;
    InvariantReport invariants;
};

struct ConvergenceReport {
    std::vector<StudyRow> rows;
    // eocs[j] relates rows j and j+1
    std::vector<std::array<std::optional<double>, ErrorRecord::count>> eocs;

    /// EOC of error `e` between the last two levels.
    std::optional<double> final_eoc(std::size_t e) const { return eocs.empty() ? std::nullopt : eocs.back()[e]; }
};

inline ConvergenceReport compute_eoc(std::vector<StudyRow> rows) {
    ConvergenceReport r;
    for (std::size_t j = 0; j + 1 < rows.size(); ++j) {
        std::array<std::optional<double>, ErrorRecord::count> e{};
        if (rows[j].has_errors && rows[j + 1].has_errors) {
            const auto a = rows[j].errors.values(), b = rows[j + 1].errors.values();
            for (std::size_t i = 0; i < ErrorRecord::count; ++i) e[i] = eoc(a[i], b[i], rows[j].h_max, rows[j + 1].h_max);
        }
        r.eocs.push_back(e);
    }
    r.rows = std::move(rows);
    return r;
}

struct StudyOptions {
    int k = 1;
    double nu = 1.0;
    std::string case_name = "bubble";
    bool convective = true;
    double forcing_scale = 1.0;
    PicardOptions picard;
};

/// One Navier-Stokes (or Stokes) solve of a catalog case on a mesh.
struct CaseSolve {
    HDGState state;
    PicardTrace trace;
    StudyRow row;
};

inline CaseSolve solve_case(const SpaceSet& s, const StudyOptions& opt) {
    const ManufacturedCase mc = manufactured_case(opt.case_name, opt.nu, opt.convective);
    const auto f = mc.forcing_fn(opt.forcing_scale);
    HdgSolver solver(s, opt.nu);
    CaseSolve out{HDGState::zero(s), {}, {}};
    const auto load = solver.loads(f);
    ConvectionField conv = ConvectionField::zero();
    if (opt.convective) {
        auto res = solver.picard_solve(f, opt.picard);
        out.state = std::move(res.state);
        out.trace = std::move(res.trace);
        conv = ConvectionField::discrete(out.state);
    } else {
        out.state = solver.solve_oseen(conv, load, opt.picard.mode);
        out.trace.iterations = 1;
        out.trace.converged = true;
    }
    StudyRow& row = out.row;
    row.h_max = s.mesh().max_diameter();
    row.cells = s.mesh().num_cells();
    row.dofs = solver.condensed_size();
    row.has_errors = opt.forcing_scale == 1.0;
    if (row.has_errors) row.errors = errors_against_exact(out.state, mc);
    row.picard_iterations = out.trace.iterations;
    row.stability = stability_monitor(out.state, opt.nu, forcing_norm(s.mesh(), f, s.high_order()));
    row.lifting = lifting_ratio(out.state);
    row.invariants = solver.check_invariants(out.state, conv, load);
    return out;
}

inline ConvergenceReport run_convergence_study(const MeshFamily& family, const StudyOptions& opt) {
    std::vector<StudyRow> rows;
    for (std::size_t j = 0; j < family.levels.size(); ++j) {
        const SpaceSet s(family.levels[j], opt.k);
        CaseSolve cs = solve_case(s, opt);
        cs.row.level = j;
        rows.push_back(cs.row);
    }
    return compute_eoc(std::move(rows));
}

/// Uniform random coefficients in [-1, 1] for every cell and trace dof. Boundary
/// traces are zeroed when `zero_boundary` is set.
inline HDGState random_state(const SpaceSet& s, std::mt19937_64& rng, bool zero_boundary = false) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    HDGState st = HDGState::zero(s);
    for (Eigen::Index i = 0; i < st.cells.size(); ++i) st.cells[i] = dist(rng);
    for (Eigen::Index i = 0; i < st.traces.size(); ++i) st.traces[i] = dist(rng);
    if (zero_boundary)
        for (Index f : s.mesh().boundary_faces()) st.uhat(f).setZero();
    return st;
}

/// Local coefficient vector of a state on cell c in LocalLayout order.
inline Vector gather_local(const HDGState& st, Index c) {
    const SpaceSet& s = *st.spaces;
    const LocalLayout lay(s, c);
    Vector x(lay.size());
    x.head(lay.cell_size()) = st.cell(c);
    const auto faces = s.mesh().cell_faces(c);
    for (std::size_t j = 0; j < faces.size(); ++j) x.segment(lay.face_offset(j), lay.face) = st.uhat(faces[j].face);
    return x;
}

struct CoercivitySample {
    double form = 0.0;      // O((w, what); (u, uhat), (u, uhat))
    double boundary = 0.0;  // sum_K <(tau_C(what) - what.n / 2)(u - uhat), u - uhat>_dK
    double scale = 0.0;     // sum_K <|tau_C(what) - what.n / 2| |u - uhat|^2>_dK + 1
};

/// Evaluates the convective quadratic form for a given convecting state and (u, uhat).
inline CoercivitySample coercivity_sample(const HDGState& conv_state, const HDGState& x) {
    const SpaceSet& s = *x.spaces;
    const PolyMesh& mesh = s.mesh();
    const ConvectionField conv = ConvectionField::discrete(conv_state);
    const std::size_t nk1 = s.modes_k1(), m = s.face_size_per_component();
    CoercivitySample out;
    out.scale = 1.0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const Vector xl = gather_local(x, c);
        out.form += xl.dot(local_O_blocks(s, c, conv).matrix * xl);
        const auto faces = mesh.cell_faces(c);
        Matrix w_cell, w_hat;
        for (std::size_t j = 0; j < faces.size(); ++j) {
            const auto& fd = s.face_high(faces[j].face);
            conv.sample_face(s, c, j, w_cell, w_hat);
            const Vec2 n = mesh.outward_normal(c, j);
            const Matrix diff = s.cell_on_face_high(c, j) * x.u(c).reshaped(nk1, 2) -
                                fd.psi * x.uhat(faces[j].face).reshaped(m, 2);
            for (std::size_t q = 0; q < fd.rule.size(); ++q) {
                const double wn = w_hat(q, 0) * n.x() + w_hat(q, 1) * n.y();
                const double a = tau_c(wn) - 0.5 * wn;
                const double d2 = diff.row(q).squaredNorm();
                out.boundary += fd.rule.weights[q] * a * d2;
                out.scale += fd.rule.weights[q] * std::abs(a) * d2;
            }
        }
    }
    return out;
}

/// Random convecting state; with `single_sign` its traces are face-wise constant so
/// what.n has one sign on every face.
inline HDGState random_convection(const SpaceSet& s, std::mt19937_64& rng, bool single_sign) {
    HDGState w = random_state(s, rng);
    if (single_sign) {
        const std::size_t m = s.face_size_per_component();
        for (std::size_t f = 0; f < s.mesh().num_faces(); ++f)
            for (std::size_t i = 0; i < 2; ++i) w.uhat(f).segment(i * m + 1, m - 1).setZero();
    }
    return w;
}

/// Errors of the plain L2 projections of a case on a mesh family; their EOCs bound
/// what the solver can show, so quadrature-limited error measurement shows up here.
inline ConvergenceReport projection_eoc_diagnostic(const MeshFamily& family, int k, const ManufacturedCase& mc) {
    std::vector<StudyRow> rows;
    for (std::size_t j = 0; j < family.levels.size(); ++j) {
        const SpaceSet s(family.levels[j], k);
        StudyRow row;
        row.level = j;
        row.h_max = family.levels[j].max_diameter();
        row.cells = family.levels[j].num_cells();
        row.errors = errors_against_exact(project_exact(s, ExactFields::of(mc)), mc);
        rows.push_back(row);
    }
    return compute_eoc(std::move(rows));
}

}  // namespace hdgns
