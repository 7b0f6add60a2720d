#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hdgns {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

using Index = std::size_t;

/// Raised for malformed mesh input, inconsistent topology or degenerate geometry.
class MeshError : public std::runtime_error {
public:
    enum class Kind { parse, topology, geometry, io };

    MeshError(Kind kind, const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          kind_(kind), line_(line) {}

    Kind kind() const noexcept { return kind_; }
    std::size_t line() const noexcept { return line_; }

private:
    Kind kind_;
    std::size_t line_;
};

/// Raised when a linear or nonlinear solve cannot produce a state.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised for invalid run configuration values.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace hdgns
