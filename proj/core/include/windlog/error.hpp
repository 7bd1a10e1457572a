#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace windlog {

/// Process exit codes used by the command-line tool; each error class maps to one.
enum class ExitCode : int {
    Ok = 0,
    Evaluation = 1,
    Parse = 2,
    Safety = 3,
    Stratification = 4,
    Io = 5,
    Divergence = 6,
    ResourceCap = 7,
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, std::string const &message) : std::runtime_error(message), code_(code) { }
    ExitCode code() const { return code_; }

private:
    ExitCode code_;
};

struct Location {
    std::uint32_t line = 0;
    std::uint32_t column = 0;
    friend bool operator==(Location const &, Location const &) = default;
};

struct Diagnostic {
    Location loc;
    std::string message;
};

/// One or more syntax errors, each with its line and column.
class ParseError : public Error {
public:
    explicit ParseError(std::vector<Diagnostic> diagnostics);
    std::vector<Diagnostic> const &diagnostics() const { return diagnostics_; }

private:
    std::vector<Diagnostic> diagnostics_;
};

struct SafetyViolation {
    std::size_t rule = 0;
    std::string variable;
    Location loc;
};

class SafetyError : public Error {
public:
    explicit SafetyError(std::vector<SafetyViolation> violations);
    std::vector<SafetyViolation> const &violations() const { return violations_; }

private:
    std::vector<SafetyViolation> violations_;
};

class StratificationError : public Error {
public:
    /// `cycle` lists predicate names along a dependency cycle through a
    /// non-harmless literal.
    explicit StratificationError(std::vector<std::string> cycle);
    std::vector<std::string> const &cycle() const { return cycle_; }

private:
    std::vector<std::string> cycle_;
};

class EvaluationError : public Error {
public:
    explicit EvaluationError(std::string const &message) : Error(ExitCode::Evaluation, message) { }
};

class ResourceError : public Error {
public:
    explicit ResourceError(std::string const &message) : Error(ExitCode::ResourceCap, message) { }
};

class IoError : public Error {
public:
    explicit IoError(std::string const &message) : Error(ExitCode::Io, message) { }
};

} // namespace windlog
