#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "hdgns/mesh.hpp"
#include "hdgns/solver.hpp"
#include "hdgns/types.hpp"

namespace hdgns {

/// Generator kind and resolution, or a mesh file.
struct MeshSpec {
    MeshKind kind = MeshKind::quad;
    std::size_t n = 8;
    std::string path;

    std::string str() const {
        return kind == MeshKind::file ? "file:" + path : std::string(to_string(kind)) + ":" + std::to_string(n);
    }
};

struct RunConfig {
    std::string command = "solve";
    MeshSpec mesh;
    int k = 1;
    double nu = 1.0;
    std::string case_name = "bubble";
    bool convective = true;
    double forcing_scale = 1.0;
    double tol = 1e-10;
    int max_iter = 50;
    SolveMode mode = SolveMode::condensed;
    int levels = 4;
    std::string out = "out";
};

namespace detail {
inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline int parse_int(const std::string& field, const std::string& v) {
    int out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(field, "expected an integer, got '" + v + "'");
    return out;
}

inline double parse_real(const std::string& field, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(field, "expected a real number, got '" + v + "'");
    }
}

inline bool parse_bool(const std::string& field, const std::string& v) {
    if (v == "on" || v == "true" || v == "yes" || v == "1") return true;
    if (v == "off" || v == "false" || v == "no" || v == "0") return false;
    throw ConfigError(field, "expected on/off, got '" + v + "'");
}
}  // namespace detail

/// Parses tri|quad|hexdom[:n] or file:<path>.
inline MeshSpec parse_mesh_spec(const std::string& text) {
    MeshSpec m;
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string tail = colon == std::string::npos ? std::string() : text.substr(colon + 1);
    if (head == "file") {
        if (tail.empty()) throw ConfigError("mesh", "file: needs a path");
        m.kind = MeshKind::file;
        m.path = tail;
        return m;
    }
    if (head == "tri")
        m.kind = MeshKind::tri;
    else if (head == "quad")
        m.kind = MeshKind::quad;
    else if (head == "hexdom")
        m.kind = MeshKind::hexdom;
    else
        throw ConfigError("mesh", "unknown mesh kind '" + head + "' (expected tri, quad, hexdom or file)");
    if (!tail.empty()) {
        const int n = detail::parse_int("mesh", tail);
        if (n < 1) throw ConfigError("mesh", "resolution must be >= 1");
        m.n = static_cast<std::size_t>(n);
    }
    return m;
}

inline SolveMode parse_mode(const std::string& v) {
    if (v == "monolithic") return SolveMode::monolithic;
    if (v == "condensed") return SolveMode::condensed;
    throw ConfigError("mode", "expected monolithic or condensed, got '" + v + "'");
}

/// Applies one key = value setting.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "mesh")
        cfg.mesh = parse_mesh_spec(value);
    else if (key == "k")
        cfg.k = detail::parse_int(key, value);
    else if (key == "nu")
        cfg.nu = detail::parse_real(key, value);
    else if (key == "case")
        cfg.case_name = value;
    else if (key == "convection")
        cfg.convective = detail::parse_bool(key, value);
    else if (key == "forcing_scale")
        cfg.forcing_scale = detail::parse_real(key, value);
    else if (key == "tol")
        cfg.tol = detail::parse_real(key, value);
    else if (key == "max_iter")
        cfg.max_iter = detail::parse_int(key, value);
    else if (key == "mode")
        cfg.mode = parse_mode(value);
    else if (key == "levels")
        cfg.levels = detail::parse_int(key, value);
    else if (key == "out")
        cfg.out = value;
    else
        throw ConfigError(key, "unknown setting");
}

/// Reads `key = value` lines; '#' starts a comment.
inline void parse_config(RunConfig& cfg, std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno), "expected key = value");
        const std::string key = detail::trim(std::string_view(t).substr(0, eq));
        const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno), "missing key");
        apply_setting(cfg, key, value);
    }
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    parse_config(cfg, ss.str());
}

inline void validate(const RunConfig& cfg) {
    if (cfg.command != "solve" && cfg.command != "study" && cfg.command != "diagnose")
        throw ConfigError("command", "expected solve, study or diagnose");
    if (cfg.k < 0 || cfg.k > 4) throw ConfigError("k", "must lie in [0, 4], got " + std::to_string(cfg.k));
    if (!(cfg.nu > 0.0) || !std::isfinite(cfg.nu)) throw ConfigError("nu", "must be positive");
    if (cfg.levels < 2 || cfg.levels > 6)
        throw ConfigError("levels", "must lie in [2, 6], got " + std::to_string(cfg.levels));
    if (!(cfg.tol > 0.0)) throw ConfigError("tol", "must be positive");
    if (cfg.max_iter < 1) throw ConfigError("max_iter", "must be >= 1");
    if (!std::isfinite(cfg.forcing_scale)) throw ConfigError("forcing_scale", "must be finite");
    if (cfg.case_name != "bubble" && cfg.case_name != "gyre")
        throw ConfigError("case", "unknown case '" + cfg.case_name + "' (expected bubble or gyre)");
    if (cfg.out.empty()) throw ConfigError("out", "must not be empty");
}

}  // namespace hdgns
