#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dg4 {

/// Machine-readable failure categories. The string form (error_code_name)
/// is what appears in reports.
enum class ErrorCode {
    SyntaxError,
    UnknownVariable,
    DivisionByZero,
    DomainError,
    ChartMismatch,
    DegreeError,
    DegreeOverflow,
    DegenerateSymplectic,
    NotClosed,
    RankDrop,
    NotGeneralPosition,
    AmbiguousKernel,
    InvalidStructure,
    NijenhuisVanishes,
    DerivedDegenerate,
    ComplexEigenvalues,
    NotASymmetry,
    FrameDependent,
    ProjectionDegenerate,
    NotNormalized,
    TypeMismatch,
    DegeneratePoint,
    FrameSingular,
    InvalidArgument,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message,
          std::optional<std::vector<double>> witness = std::nullopt)
        : std::runtime_error(message), code_(code), witness_(std::move(witness)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::optional<std::vector<double>>& witness() const noexcept { return witness_; }

private:
    ErrorCode code_;
    std::optional<std::vector<double>> witness_;
};

class SyntaxError : public Error {
public:
    SyntaxError(const std::string& message, std::size_t offset)
        : Error(ErrorCode::SyntaxError, message + " at byte " + std::to_string(offset)),
          offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class UnknownVariable : public Error {
public:
    UnknownVariable(const std::string& name, std::size_t offset)
        : Error(ErrorCode::UnknownVariable,
                "unknown variable '" + name + "' at byte " + std::to_string(offset)),
          name_(name), offset_(offset) {}
    const std::string& name() const noexcept { return name_; }
    std::size_t offset() const noexcept { return offset_; }

private:
    std::string name_;
    std::size_t offset_;
};

/// Raised by pointwise evaluation. `location` is a rendering of the failing
/// subexpression (truncated for large trees).
class EvalError : public Error {
public:
    EvalError(ErrorCode code, std::string location)
        : Error(code, std::string(code == ErrorCode::DivisionByZero ? "division by zero"
                                                                    : "domain error") +
                          " in " + location),
          location_(std::move(location)) {}
    const std::string& location() const noexcept { return location_; }

private:
    std::string location_;
};

}  // namespace dg4
