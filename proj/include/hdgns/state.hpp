#pragma once

#include "hdgns/spaces.hpp"

namespace hdgns {

/// Coefficients of (L_h, u_h, p_h, uhat_h). Boundary-face traces hold the
/// prescribed Dirichlet data.
struct HDGState {
    const SpaceSet* spaces = nullptr;
    Vector cells;   // per cell [L | u | p], see SpaceSet
    Vector traces;  // per face, all faces
    double multiplier = 0.0;

    static HDGState zero(const SpaceSet& s) {
        return {&s, Vector::Zero(s.num_cell_dofs()), Vector::Zero(s.num_trace_dofs()), 0.0};
    }

    auto cell(Index c) { return cells.segment(c * spaces->cell_size(), spaces->cell_size()); }
    auto cell(Index c) const { return cells.segment(c * spaces->cell_size(), spaces->cell_size()); }
    auto L(Index c) { return cells.segment(c * spaces->cell_size() + spaces->g_offset(), spaces->g_size()); }
    auto L(Index c) const { return cells.segment(c * spaces->cell_size() + spaces->g_offset(), spaces->g_size()); }
    auto u(Index c) { return cells.segment(c * spaces->cell_size() + spaces->v_offset(), spaces->v_size()); }
    auto u(Index c) const { return cells.segment(c * spaces->cell_size() + spaces->v_offset(), spaces->v_size()); }
    auto p(Index c) { return cells.segment(c * spaces->cell_size() + spaces->q_offset(), spaces->q_size()); }
    auto p(Index c) const { return cells.segment(c * spaces->cell_size() + spaces->q_offset(), spaces->q_size()); }
    auto uhat(Index f) { return traces.segment(f * spaces->face_size(), spaces->face_size()); }
    auto uhat(Index f) const { return traces.segment(f * spaces->face_size(), spaces->face_size()); }
};

}  // namespace hdgns
