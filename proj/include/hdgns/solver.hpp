#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "hdgns/forms.hpp"
#include "hdgns/norms.hpp"
#include "hdgns/spaces.hpp"
#include "hdgns/state.hpp"

namespace hdgns {

using SparseMatrix = Eigen::SparseMatrix<double>;
using VectorFunction = std::function<Vec2(const Vec2&)>;

enum class SolveMode { monolithic, condensed };

inline std::string_view to_string(SolveMode m) { return m == SolveMode::monolithic ? "monolithic" : "condensed"; }

/// Square sparse system and right-hand side.
struct LinearSystem {
    SparseMatrix matrix;
    Vector rhs;
};

/// Per-cell data that maps the solved globals back to (L, u, p - mean(p)).
struct CellRecovery {
    std::vector<int> internal;      // local indices of eliminated dofs
    std::vector<Index> external;    // global (condensed) index of each kept local dof
    Matrix coupling;                // A_II^{-1} A_IE
    Vector offset;                  // A_II^{-1} (b_I - A_IP g_P)
};

/// Global system over [interior trace dofs | per-cell mean pressures | multiplier].
struct CondensedSystem {
    LinearSystem system;
    std::vector<CellRecovery> recovery;
};

/// Results of the structural checks performed on a computed state.
struct InvariantReport {
    double pressure_mean = 0.0;   // |int_Omega p_h|
    double max_trace_flux = 0.0;  // max_K |oint_dK uhat.n|
    double residual = 0.0;        // relative Galerkin residual

    bool pass(double mean_tol = 1e-10, double flux_tol = 1e-10, double residual_tol = 1e-9) const {
        return pressure_mean <= mean_tol && max_trace_flux <= flux_tol && residual <= residual_tol;
    }
};

struct PicardOptions {
    double tol = 1e-10;
    int max_iter = 50;
    SolveMode mode = SolveMode::condensed;
};

/// Convergence history of the fixed-point iteration.
struct PicardTrace {
    int iterations = 0;
    bool converged = false;
    std::vector<double> increments;  // |||(u^{n+1} - u^n, uhat^{n+1} - uhat^n)|||_{1,h}
    std::vector<double> ratios;      // increments[n] / increments[n-1]
    std::vector<double> stability;   // nu |||(u^n, uhat^n)|||_{1,h} / ||f||_Omega
};

struct PicardResult {
    HDGState state;
    PicardTrace trace;
};

class PicardError : public SolverError {
public:
    PicardError(const std::string& what, PicardTrace trace) : SolverError(what), trace_(std::move(trace)) {}
    const PicardTrace& trace() const { return trace_; }

private:
    PicardTrace trace_;
};

/// HDG discretization of the Oseen/Navier-Stokes problem on a fixed SpaceSet.
///
/// The S-part element matrices depend only on geometry and nu and are built
/// once; the O-part is rebuilt for every convection field.
class HdgSolver {
public:
    HdgSolver(const SpaceSet& spaces, double nu) : s_(&spaces), nu_(nu) {
        if (!(nu > 0.0)) throw ConfigError("nu", "viscosity must be positive");
        const PolyMesh& mesh = spaces.mesh();
        s_blocks_.reserve(mesh.num_cells());
        mean_weights_.reserve(mesh.num_cells());
        for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
            s_blocks_.push_back(local_S_blocks(spaces, c, nu));
            const auto& d = spaces.cell_high(c);
            const Eigen::Map<const Vector> w(d.rule.weights.data(), d.rule.size());
            mean_weights_.push_back(d.phi.leftCols(spaces.modes_k()).transpose() * w);
        }
        boundary_ = Vector::Zero(spaces.num_trace_dofs());
    }

    const SpaceSet& spaces() const { return *s_; }
    double nu() const { return nu_; }

    /// Pins boundary traces to Pi_M g (homogeneous by default).
    void set_dirichlet(const VectorFunction& g) {
        boundary_.setZero();
        if (!g) return;
        const std::size_t fs = s_->face_size();
        for (Index f : s_->mesh().boundary_faces()) boundary_.segment(f * fs, fs) = project_face(*s_, f, g);
    }

    /// Trace vector holding the Dirichlet data on boundary faces and zero elsewhere.
    const Vector& boundary_traces() const { return boundary_; }

    const LocalBlocks& s_blocks(Index c) const { return s_blocks_[c]; }

    /// Per-cell integrals of the Q_h modes.
    const Vector& mean_weights(Index c) const { return mean_weights_[c]; }

    std::vector<Vector> loads(const VectorFunction& f) const {
        std::vector<Vector> out(s_->mesh().num_cells());
        for (std::size_t c = 0; c < out.size(); ++c)
            out[c] = f ? local_load(*s_, c, f) : Vector::Zero(s_->v_size());
        return out;
    }

    std::size_t monolithic_size() const { return s_->num_cell_dofs() + s_->num_interior_trace_dofs() + 1; }
    std::size_t condensed_size() const { return s_->num_interior_trace_dofs() + s_->mesh().num_cells() + 1; }

    LinearSystem assemble_monolithic(const ConvectionField& conv, const std::vector<Vector>& load) const {
        const std::size_t N = monolithic_size();
        std::vector<Eigen::Triplet<double>> trip;
        Vector rhs = Vector::Zero(N);
        for (std::size_t c = 0; c < s_->mesh().num_cells(); ++c) {
            Matrix K;
            Vector b;
            augmented_local(c, conv, load[c], K, b);
            std::vector<long> gidx;
            Vector pinned;
            monolithic_map(c, gidx, pinned);
            for (Eigen::Index r = 0; r < K.rows(); ++r) {
                if (gidx[r] < 0) continue;
                double acc = b[r];
                for (Eigen::Index col = 0; col < K.cols(); ++col) {
                    const double a = K(r, col);
                    if (a == 0.0) continue;
                    if (gidx[col] < 0)
                        acc -= a * pinned[col];
                    else
                        trip.emplace_back(gidx[r], gidx[col], a);
                }
                rhs[gidx[r]] += acc;
            }
        }
        SparseMatrix A(N, N);
        A.setFromTriplets(trip.begin(), trip.end());
        return {std::move(A), std::move(rhs)};
    }

    /// Packs a state into the monolithic unknown ordering.
    Vector pack(const HDGState& st) const {
        Vector x(monolithic_size());
        const std::size_t ncd = s_->num_cell_dofs(), fs = s_->face_size();
        x.head(ncd) = st.cells;
        for (Index f : s_->mesh().interior_faces()) x.segment(ncd + s_->interior_index(f) * fs, fs) = st.uhat(f);
        x[x.size() - 1] = st.multiplier;
        return x;
    }

    HDGState unpack(const Vector& x) const {
        HDGState st = HDGState::zero(*s_);
        const std::size_t ncd = s_->num_cell_dofs(), fs = s_->face_size();
        st.cells = x.head(ncd);
        st.traces = boundary_;
        for (Index f : s_->mesh().interior_faces()) st.uhat(f) = x.segment(ncd + s_->interior_index(f) * fs, fs);
        st.multiplier = x[x.size() - 1];
        return st;
    }

    /// Eliminates (L, u, p - mean(p)) cell by cell.
    CondensedSystem condense(const ConvectionField& conv, const std::vector<Vector>& load) const {
        const PolyMesh& mesh = s_->mesh();
        const std::size_t N = condensed_size();
        CondensedSystem out;
        out.recovery.resize(mesh.num_cells());
        std::vector<Eigen::Triplet<double>> trip;
        Vector rhs = Vector::Zero(N);
        for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
            Matrix K;
            Vector b;
            augmented_local(c, conv, load[c], K, b);
            std::vector<int> I, E, P;
            std::vector<Index> Eg;
            Vector pinned_all;
            condensed_map(c, I, E, Eg, P, pinned_all);
            Vector bp = b;
            for (int p : P) bp -= K.col(p) * pinned_all[p];

            const Matrix Aii = K(I, I);
            Eigen::PartialPivLU<Matrix> lu(Aii);
            if (!(lu.rcond() > 1e-14))
                throw SolverError("local block is singular on cell " + std::to_string(c) +
                                  " (rcond " + std::to_string(lu.rcond()) + ")");
            CellRecovery& rec = out.recovery[c];
            rec.internal = I;
            rec.external = Eg;
            rec.coupling = lu.solve(Matrix(K(I, E)));
            rec.offset = lu.solve(Vector(bp(I)));
            const Matrix Aei = K(E, I);
            const Matrix schur = K(E, E) - Aei * rec.coupling;
            const Vector r = bp(E) - Aei * rec.offset;
            for (std::size_t i = 0; i < E.size(); ++i) {
                rhs[Eg[i]] += r[i];
                for (std::size_t j = 0; j < E.size(); ++j)
                    if (schur(i, j) != 0.0) trip.emplace_back(Eg[i], Eg[j], schur(i, j));
            }
        }
        SparseMatrix A(N, N);
        A.setFromTriplets(trip.begin(), trip.end());
        out.system = {std::move(A), std::move(rhs)};
        return out;
    }

    HDGState recover(const CondensedSystem& cs, const Vector& globals) const {
        const PolyMesh& mesh = s_->mesh();
        HDGState st = HDGState::zero(*s_);
        st.traces = boundary_;
        const std::size_t fs = s_->face_size(), nit = s_->num_interior_trace_dofs();
        for (Index f : mesh.interior_faces()) st.uhat(f) = globals.segment(s_->interior_index(f) * fs, fs);
        st.multiplier = globals[globals.size() - 1];
        for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
            const CellRecovery& rec = cs.recovery[c];
            Vector xe(rec.external.size());
            for (std::size_t i = 0; i < rec.external.size(); ++i) xe[i] = globals[rec.external[i]];
            const Vector xi = rec.offset - rec.coupling * xe;
            auto cell = st.cell(c);
            for (std::size_t i = 0; i < rec.internal.size(); ++i) cell[rec.internal[i]] = xi[i];
            st.p(c)[0] = globals[nit + c];
        }
        return st;
    }

    HDGState solve_oseen(const ConvectionField& conv, const std::vector<Vector>& load, SolveMode mode) const {
        if (mode == SolveMode::monolithic) {
            const LinearSystem sys = assemble_monolithic(conv, load);
            return unpack(sparse_solve(sys));
        }
        const CondensedSystem cs = condense(conv, load);
        return recover(cs, sparse_solve(cs.system));
    }

    HDGState solve_oseen(const ConvectionField& conv, const VectorFunction& f, SolveMode mode) const {
        return solve_oseen(conv, loads(f), mode);
    }

    /// ||A x - b|| / ||b|| of the monolithic system for `conv` evaluated at `state`
    /// (absolute when b = 0).
    double residual(const HDGState& state, const ConvectionField& conv, const std::vector<Vector>& load) const {
        const LinearSystem sys = assemble_monolithic(conv, load);
        const double r = (sys.matrix * pack(state) - sys.rhs).norm();
        const double bn = sys.rhs.norm();
        return bn > 0.0 ? r / bn : r;
    }

    /// |int_Omega p_h|.
    double pressure_mean(const HDGState& st) const {
        double m = 0.0;
        for (std::size_t c = 0; c < s_->mesh().num_cells(); ++c) m += mean_weights_[c].dot(st.p(c));
        return std::abs(m);
    }

    /// max over cells of |oint_dK uhat.n|.
    double max_trace_flux(const HDGState& st) const {
        const PolyMesh& mesh = s_->mesh();
        const std::size_t m = s_->face_size_per_component();
        double worst = 0.0;
        for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
            double flux = 0.0;
            const auto faces = mesh.cell_faces(c);
            for (std::size_t j = 0; j < faces.size(); ++j) {
                const auto& fd = s_->face_linear(faces[j].face);
                const Eigen::Map<const Vector> w(fd.rule.weights.data(), fd.rule.size());
                const Vector moments = fd.psi.transpose() * w;
                const Vec2 n = mesh.outward_normal(c, j);
                const auto uh = st.uhat(faces[j].face);
                flux += n.x() * moments.dot(uh.segment(0, m)) + n.y() * moments.dot(uh.segment(m, m));
            }
            worst = std::max(worst, std::abs(flux));
        }
        return worst;
    }

    InvariantReport check_invariants(const HDGState& st, const ConvectionField& conv,
                                     const std::vector<Vector>& load) const {
        return {pressure_mean(st), max_trace_flux(st), residual(st, conv, load)};
    }

    /// Fixed-point iteration (u^{n+1}, uhat^{n+1}) = F(u^n, uhat^n), starting from
    /// zero so that the first iterate is the Stokes solution.
    PicardResult picard_solve(const VectorFunction& f, const PicardOptions& opt = {}) const {
        if (!(opt.tol > 0.0)) throw ConfigError("tol", "tolerance must be positive");
        const auto load = loads(f);
        const double fnorm = f ? l2_norm(s_->mesh(), analytic_field(f, [](const Vec2&) { return Mat2::Zero().eval(); }),
                                         s_->high_order())
                               : 0.0;
        PicardTrace trace;
        HDGState prev = HDGState::zero(*s_);
        for (int it = 0; it < opt.max_iter; ++it) {
            const ConvectionField conv = it == 0 ? ConvectionField::zero() : ConvectionField::discrete(prev);
            HDGState next = solve_oseen(conv, load, opt.mode);
            HDGState diff = next;
            diff.cells -= prev.cells;
            diff.traces -= prev.traces;
            const double inc = triple_norm_1h(diff);
            trace.iterations = it + 1;
            if (!trace.increments.empty())
                trace.ratios.push_back(trace.increments.back() > 0.0 ? inc / trace.increments.back()
                                                                     : std::numeric_limits<double>::infinity());
            trace.increments.push_back(inc);
            trace.stability.push_back(fnorm > 0.0 ? nu_ * triple_norm_1h(next) / fnorm : 0.0);
            prev = std::move(next);
            if (!std::isfinite(inc)) break;
            if (inc <= opt.tol) {
                trace.converged = true;
                return {std::move(prev), std::move(trace)};
            }
        }
        throw PicardError("Picard iteration did not converge in " + std::to_string(trace.iterations) +
                              " iterations (last increment " +
                              (trace.increments.empty() ? std::string("n/a") : std::to_string(trace.increments.back())) +
                              ")",
                          std::move(trace));
    }

    static Vector sparse_solve(const LinearSystem& sys) {
        Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
        SparseMatrix A = sys.matrix;
        A.makeCompressed();
        lu.analyzePattern(A);
        lu.factorize(A);
        if (lu.info() != Eigen::Success)
            throw SolverError("sparse LU factorization failed (n = " + std::to_string(A.rows()) +
                              "): " + lu.lastErrorMessage());
        Vector x = lu.solve(sys.rhs);
        if (lu.info() != Eigen::Success || !x.allFinite())
            throw SolverError("sparse LU solve failed (n = " + std::to_string(A.rows()) + ")");
        return x;
    }

private:
    // Local matrix S + O with one extra row/column for the mean-zero multiplier.
    void augmented_local(Index c, const ConvectionField& conv, const Vector& load, Matrix& K, Vector& b) const {
        const LocalLayout& lay = s_blocks_[c].layout;
        const std::size_t n = lay.size();
        K = Matrix::Zero(n + 1, n + 1);
        K.topLeftCorner(n, n) = s_blocks_[c].matrix;
        if (!conv.is_zero()) K.topLeftCorner(n, n) += local_O_blocks(*s_, c, conv).matrix;
        const std::size_t op = lay.offset(LocalField::p), nq = lay.q;
        K.block(op, n, nq, 1) = mean_weights_[c];
        K.block(n, op, 1, nq) = mean_weights_[c].transpose();
        b = Vector::Zero(n + 1);
        b.segment(lay.offset(LocalField::u), lay.v) = load;
    }

    // Global monolithic index of each augmented local dof; -1 marks pinned boundary traces.
    void monolithic_map(Index c, std::vector<long>& gidx, Vector& pinned) const {
        const LocalLayout& lay = s_blocks_[c].layout;
        const std::size_t n = lay.size(), cs = lay.cell_size(), fs = lay.face;
        gidx.assign(n + 1, -1);
        pinned = Vector::Zero(n + 1);
        for (std::size_t i = 0; i < cs; ++i) gidx[i] = static_cast<long>(c * cs + i);
        const std::size_t ncd = s_->num_cell_dofs();
        const auto faces = s_->mesh().cell_faces(c);
        for (std::size_t j = 0; j < faces.size(); ++j) {
            const Index f = faces[j].face;
            const Index ii = s_->interior_index(f);
            for (std::size_t l = 0; l < fs; ++l) {
                const std::size_t loc = lay.face_offset(j) + l;
                if (ii == boundary_marker)
                    pinned[loc] = boundary_[f * fs + l];
                else
                    gidx[loc] = static_cast<long>(ncd + ii * fs + l);
            }
        }
        gidx[n] = static_cast<long>(monolithic_size() - 1);
    }

    // Splits augmented local dofs into eliminated (I), kept (E, with global index)
    // and pinned (P) sets.
    void condensed_map(Index c, std::vector<int>& I, std::vector<int>& E, std::vector<Index>& Eg, std::vector<int>& P,
                       Vector& pinned) const {
        const LocalLayout& lay = s_blocks_[c].layout;
        const std::size_t n = lay.size(), fs = lay.face;
        const std::size_t nit = s_->num_interior_trace_dofs();
        pinned = Vector::Zero(n + 1);
        const std::size_t p0 = lay.offset(LocalField::p);
        for (std::size_t i = 0; i < lay.cell_size(); ++i) {
            if (i == p0) {
                E.push_back(static_cast<int>(i));
                Eg.push_back(nit + c);
            } else {
                I.push_back(static_cast<int>(i));
            }
        }
        const auto faces = s_->mesh().cell_faces(c);
        for (std::size_t j = 0; j < faces.size(); ++j) {
            const Index f = faces[j].face;
            const Index ii = s_->interior_index(f);
            for (std::size_t l = 0; l < fs; ++l) {
                const int loc = static_cast<int>(lay.face_offset(j) + l);
                if (ii == boundary_marker) {
                    P.push_back(loc);
                    pinned[loc] = boundary_[f * fs + l];
                } else {
                    E.push_back(loc);
                    Eg.push_back(ii * fs + l);
                }
            }
        }
        E.push_back(static_cast<int>(n));
        Eg.push_back(condensed_size() - 1);
    }

    const SpaceSet* s_;
    double nu_;
    std::vector<LocalBlocks> s_blocks_;
    std::vector<Vector> mean_weights_;
    Vector boundary_;
};

}  // namespace hdgns
