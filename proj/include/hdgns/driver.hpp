#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "hdgns/analysis.hpp"
#include "hdgns/config.hpp"
#include "hdgns/mesh.hpp"
#include "hdgns/vtk.hpp"

namespace hdgns {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_mesh = 3, exit_solver = 4 };

inline PolyMesh read_mesh_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MeshError(MeshError::Kind::io, "cannot open mesh file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return read_mesh(ss.str());
}

inline PolyMesh load_mesh(const MeshSpec& spec) {
    if (spec.kind == MeshKind::file) return read_mesh_file(spec.path);
    return generate_structured(spec.kind, spec.n);
}

inline MeshFamily load_family(const MeshSpec& spec, std::size_t levels) {
    if (spec.kind == MeshKind::file) return build_family(read_mesh_file(spec.path), levels);
    return build_family(spec.kind, levels, spec.n);
}

namespace detail {
inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

inline std::ofstream open_output(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw MeshError(MeshError::Kind::io, "cannot write " + p.string());
    return out;
}
}  // namespace detail

/// CSV with full precision. EOC cells are empty on the first row and "exact" when
/// an error is at round-off level; error cells are empty when no exact solution applies.
inline std::string report_csv(const ConvergenceReport& rep) {
    std::ostringstream out;
    out << "level,h_max,cells,dofs";
    for (const char* n : ErrorRecord::names()) out << ',' << n;
    for (const char* n : ErrorRecord::names()) out << ",eoc" << (n + 3);
    out << ",picard_iters\n";
    for (std::size_t j = 0; j < rep.rows.size(); ++j) {
        const StudyRow& r = rep.rows[j];
        out << r.level << ',' << detail::num(r.h_max) << ',' << r.cells << ',' << r.dofs;
        for (double e : r.errors.values()) out << ',' << (r.has_errors ? detail::num(e) : "");
        for (std::size_t i = 0; i < ErrorRecord::count; ++i) {
            out << ',';
            if (j == 0 || !r.has_errors || !rep.rows[j - 1].has_errors) continue;
            const auto& e = rep.eocs[j - 1][i];
            out << (e ? detail::num(*e) : "exact");
        }
        out << ',' << r.picard_iterations << '\n';
    }
    return out.str();
}

inline void write_invariants(std::ostream& out, const InvariantReport& inv, const std::string& prefix = "") {
    out << prefix << "invariant pressure_mean " << detail::short_num(inv.pressure_mean) << ' '
        << detail::verdict(inv.pressure_mean <= 1e-10) << '\n';
    out << prefix << "invariant trace_flux " << detail::short_num(inv.max_trace_flux) << ' '
        << detail::verdict(inv.max_trace_flux <= 1e-10) << '\n';
    out << prefix << "invariant residual " << detail::short_num(inv.residual) << ' '
        << detail::verdict(inv.residual <= 1e-9) << '\n';
}

inline void write_header(std::ostream& out, const RunConfig& cfg) {
    out << "command " << cfg.command << '\n';
    out << "mesh " << cfg.mesh.str() << '\n';
    out << "k " << cfg.k << "\nnu " << detail::short_num(cfg.nu) << '\n';
    out << "case " << cfg.case_name << " convection " << (cfg.convective ? "on" : "off") << " forcing_scale "
        << detail::short_num(cfg.forcing_scale) << '\n';
    out << "mode " << to_string(cfg.mode) << '\n';
}

inline void write_trace(std::ostream& out, const PicardTrace& t) {
    out << "picard iterations " << t.iterations << " converged " << (t.converged ? "yes" : "no") << '\n';
    for (std::size_t i = 0; i < t.increments.size(); ++i) {
        out << "  iter " << i + 1 << " increment " << detail::short_num(t.increments[i]);
        out << " ratio " << (i == 0 ? std::string("-") : detail::short_num(t.ratios[i - 1]));
        out << " stability " << detail::short_num(t.stability[i]) << '\n';
    }
}

inline StudyOptions study_options(const RunConfig& cfg) {
    StudyOptions o;
    o.k = cfg.k;
    o.nu = cfg.nu;
    o.case_name = cfg.case_name;
    o.convective = cfg.convective;
    o.forcing_scale = cfg.forcing_scale;
    o.picard = {cfg.tol, cfg.max_iter, cfg.mode};
    return o;
}

inline int run_solve(const RunConfig& cfg, std::ostream& log) {
    const PolyMesh mesh = load_mesh(cfg.mesh);
    const SpaceSet s(mesh, cfg.k);
    CaseSolve cs = solve_case(s, study_options(cfg));
    const std::filesystem::path dir(cfg.out);
    std::filesystem::create_directories(dir);

    const ConvergenceReport rep = compute_eoc({cs.row});
    detail::open_output(dir / "report.csv") << report_csv(rep);
    export_vtk(cs.state, (dir / "solution.vtk").string());

    std::ostringstream sum;
    write_header(sum, cfg);
    sum << "cells " << mesh.num_cells() << " faces " << mesh.num_faces() << " h_max " << detail::short_num(cs.row.h_max)
        << " dofs " << cs.row.dofs << '\n';
    write_trace(sum, cs.trace);
    sum << "stability_monitor " << detail::short_num(cs.row.stability) << '\n';
    sum << "lifting_ratio " << detail::short_num(cs.row.lifting) << '\n';
    if (cs.row.has_errors) {
        const auto v = cs.row.errors.values();
        for (std::size_t i = 0; i < ErrorRecord::count; ++i)
            sum << ErrorRecord::names()[i] << ' ' << detail::short_num(v[i]) << '\n';
    }
    write_invariants(sum, cs.row.invariants);
    detail::open_output(dir / "summary.txt") << sum.str();
    log << sum.str();
    return exit_ok;
}

/// Threshold checks of a convergence study (rates on the final level pair,
/// invariants on every level, monitor bands across levels).
inline std::vector<std::pair<std::string, bool>> study_checks(const ConvergenceReport& rep, int k) {
    std::vector<std::pair<std::string, bool>> out;
    auto rate = [&](std::size_t e, double floor, const char* name) {
        const auto v = rep.final_eoc(e);
        out.push_back({std::string("eoc ") + name + " >= " + detail::short_num(floor) + ": " +
                           (v ? detail::short_num(*v) : std::string("n/a")),
                       v && *v >= floor});
    };
    if (!rep.rows.empty() && rep.rows.back().has_errors) {
        const double base = k + 1 - 0.25;
        rate(0, base, "L");
        rate(2, base, "u_1h");
        rate(3, base, "p");
        // the velocity gains an order only for k >= 1
        rate(1, k >= 1 ? k + 2 - 0.3 : base, "u");
    }
    double smin = std::numeric_limits<double>::infinity(), smax = 0, lmin = smin, lmax = 0;
    for (const auto& r : rep.rows) {
        out.push_back({"invariants level " + std::to_string(r.level), r.invariants.pass()});
        smin = std::min(smin, r.stability);
        smax = std::max(smax, r.stability);
        lmin = std::min(lmin, r.lifting);
        lmax = std::max(lmax, r.lifting);
    }
    if (smin > 0) out.push_back({"stability max/min <= 2: " + detail::short_num(smax / smin), smax <= 2 * smin});
    if (lmin > 0) out.push_back({"lifting ratio max/min <= 2: " + detail::short_num(lmax / lmin), lmax <= 2 * lmin});
    return out;
}

inline int run_study(const RunConfig& cfg, std::ostream& log) {
    const MeshFamily family = load_family(cfg.mesh, static_cast<std::size_t>(cfg.levels));
    const StudyOptions opt = study_options(cfg);
    std::vector<StudyRow> rows;
    HDGState finest;
    std::unique_ptr<SpaceSet> finest_spaces;
    for (std::size_t j = 0; j < family.levels.size(); ++j) {
        auto s = std::make_unique<SpaceSet>(family.levels[j], cfg.k);
        CaseSolve cs = solve_case(*s, opt);
        cs.row.level = j;
        rows.push_back(cs.row);
        log << "level " << j << " h_max " << detail::short_num(cs.row.h_max) << " dofs " << cs.row.dofs
            << " picard " << cs.row.picard_iterations << '\n';
        finest = std::move(cs.state);
        finest_spaces = std::move(s);
    }
    const ConvergenceReport rep = compute_eoc(std::move(rows));
    const std::filesystem::path dir(cfg.out);
    std::filesystem::create_directories(dir);
    detail::open_output(dir / "report.csv") << report_csv(rep);
    export_vtk(finest, (dir / "solution.vtk").string());

    std::ostringstream sum;
    write_header(sum, cfg);
    sum << "levels " << cfg.levels << '\n';
    for (const auto& r : rep.rows) {
        sum << "level " << r.level << " h_max " << detail::short_num(r.h_max) << " stability "
            << detail::short_num(r.stability) << " lifting_ratio " << detail::short_num(r.lifting) << '\n';
        write_invariants(sum, r.invariants, "  ");
    }
    for (const auto& [what, ok] : study_checks(rep, cfg.k)) sum << "check " << what << ' ' << detail::verdict(ok) << '\n';
    detail::open_output(dir / "summary.txt") << sum.str();
    log << sum.str();
    return exit_ok;
}

inline int run_diagnose(const RunConfig& cfg, std::ostream& log) {
    const MeshFamily family = load_family(cfg.mesh, static_cast<std::size_t>(cfg.levels));
    const PolyMesh& mesh = family.levels.front();
    std::ostringstream sum;
    write_header(sum, cfg);

    double min_angle = std::numeric_limits<double>::infinity(), max_shape = 0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        min_angle = std::min(min_angle, mesh.min_angle(c));
        max_shape = std::max(max_shape, mesh.shape_metric(c));
    }
    sum << "cells " << mesh.num_cells() << " faces " << mesh.num_faces() << " h_max " << detail::short_num(mesh.max_diameter())
        << '\n';
    sum << "min_angle_deg " << detail::short_num(min_angle * 180.0 / std::numbers::pi) << '\n';
    sum << "max_shape_metric " << detail::short_num(max_shape) << '\n';
    sum << "diameter_ratios";
    for (double r : family.diameter_ratios()) sum << ' ' << detail::short_num(r);
    sum << '\n';

    const ManufacturedCase mc = manufactured_case(cfg.case_name, cfg.nu, cfg.convective);
    const ConvergenceReport proj = projection_eoc_diagnostic(family, cfg.k, mc);
    sum << "projection_eoc";
    for (std::size_t i = 0; i < ErrorRecord::count; ++i) {
        const auto e = proj.final_eoc(i);
        sum << ' ' << ErrorRecord::names()[i] + 4 << '=' << (e ? detail::short_num(*e) : std::string("exact"));
    }
    sum << '\n';

    const SpaceSet s(mesh, cfg.k);
    std::mt19937_64 rng(20240611);
    double worst_identity = 0, worst_form = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 20; ++i) {
        const HDGState w = random_convection(s, rng, true);
        const HDGState x = random_state(s, rng, true);
        const CoercivitySample cs = coercivity_sample(w, x);
        worst_identity = std::max(worst_identity, std::abs(cs.form - cs.boundary) / cs.scale);
        const HDGState w2 = random_convection(s, rng, false);
        const CoercivitySample cu = coercivity_sample(w2, x);
        worst_form = std::min(worst_form, cu.form / cu.scale);
    }
    sum << "coercivity identity_defect " << detail::short_num(worst_identity) << ' '
        << detail::verdict(worst_identity <= 1e-8) << '\n';
    sum << "coercivity min_form " << detail::short_num(worst_form) << ' ' << detail::verdict(worst_form >= -1e-8) << '\n';

    CaseSolve solved = solve_case(s, study_options(cfg));
    sum << "stability_monitor " << detail::short_num(solved.row.stability) << '\n';
    sum << "lifting_ratio " << detail::short_num(solved.row.lifting) << '\n';
    write_trace(sum, solved.trace);
    write_invariants(sum, solved.row.invariants);

    const std::filesystem::path dir(cfg.out);
    std::filesystem::create_directories(dir);
    detail::open_output(dir / "report.csv") << report_csv(proj);
    export_vtk(solved.state, (dir / "solution.vtk").string());
    detail::open_output(dir / "summary.txt") << sum.str();
    log << sum.str();
    return exit_ok;
}

/// Runs a validated configuration and maps failures to exit codes.
inline int run(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
    try {
        validate(cfg);
        if (cfg.command == "solve") return run_solve(cfg, log);
        if (cfg.command == "study") return run_study(cfg, log);
        return run_diagnose(cfg, log);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const MeshError& e) {
        err << "mesh error: " << e.what() << '\n';
        return exit_mesh;
    } catch (const PicardError& e) {
        err << "solver error: " << e.what() << '\n';
        write_trace(err, e.trace());
        return exit_solver;
    } catch (const SolverError& e) {
        err << "solver error: " << e.what() << '\n';
        return exit_solver;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "io error: " << e.what() << '\n';
        return exit_mesh;
    }
}

}  // namespace hdgns
