#pragma once
#include <stdexcept>
#include <string>

namespace dgt {

// Every failure raised by this library derives from Error, so callers can
// catch one type at the CLI boundary and map subtypes to exit codes.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/* graph construction */

struct SelfEdge : Error {
    int node;  // 0-based
    explicit SelfEdge(int node_)
        : Error("self edge at node " + std::to_string(node_ + 1)), node(node_) {}
};

struct NotStronglyConnected : Error {
    int from, to;  // 1-based pair with no directed path, as reported
    NotStronglyConnected(int from_1based, int to_1based)
        : Error("graph is not strongly connected: no path from " +
                std::to_string(from_1based) + " to " + std::to_string(to_1based)),
          from(from_1based), to(to_1based) {}
};

struct IndexOutOfRange : Error {
    explicit IndexOutOfRange(const std::string& msg) : Error(msg) {}
};

struct TooSmall : Error {
    explicit TooSmall(const std::string& msg) : Error(msg) {}
};

/* objective suites */

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};

struct SingularGlobalHessian : Error {
    explicit SingularGlobalHessian(const std::string& msg) : Error(msg) {}
};

/* weight schedules */

struct EmptySimplex : Error {
    explicit EmptySimplex(const std::string& msg) : Error(msg) {}
};

/* engine */

struct NonFiniteState : Error {
    long long iteration;
    NonFiniteState(long long k, const std::string& what_part)
        : Error("non-finite state at iteration " + std::to_string(k) + " (" + what_part + ")"),
          iteration(k) {}
};

struct StochasticityViolation : Error {
    std::string matrix;  // which input matrix failed ("W", "R", "C")
    StochasticityViolation(const std::string& matrix_, const std::string& msg)
        : Error("matrix " + matrix_ + ": " + msg), matrix(matrix_) {}
};

struct WrongPreset : Error {
    explicit WrongPreset(const std::string& msg) : Error(msg) {}
};

/* trace persistence and privacy */

struct MissingSidecar : Error {
    explicit MissingSidecar(const std::string& msg) : Error(msg) {}
};

struct TopologyMismatch : Error {
    explicit TopologyMismatch(const std::string& msg) : Error(msg) {}
};

struct NoCounterpart : Error {
    explicit NoCounterpart(const std::string& msg) : Error(msg) {}
};

struct DenominatorNearZero : Error {
    int coordinate;  // offending coordinate l
    DenominatorNearZero(int coordinate_, const std::string& msg)
        : Error(msg + " (coordinate " + std::to_string(coordinate_) + ")"),
          coordinate(coordinate_) {}
};

struct StructureMismatch : Error {
    explicit StructureMismatch(const std::string& msg) : Error(msg) {}
};

/* analysis */

struct BufferTooShort : Error {
    double truncation_estimate;
    BufferTooShort(double estimate, const std::string& msg)
        : Error(msg), truncation_estimate(estimate) {}
};

struct SeriesTooShort : Error {
    explicit SeriesTooShort(const std::string& msg) : Error(msg) {}
};

struct NonPositiveError : Error {
    explicit NonPositiveError(const std::string& msg) : Error(msg) {}
};

struct DimensionTooLarge : Error {
    explicit DimensionTooLarge(const std::string& msg) : Error(msg) {}
};

/* cli */

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace dgt
