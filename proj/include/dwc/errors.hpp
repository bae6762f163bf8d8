#pragma once

#include <stdexcept>
#include <string>

namespace dwc {

// Base of every error the library throws on purpose. The CLI maps the
// concrete type onto an exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (negative speed,
// density above jam density, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Invalid or inconsistent configuration, including schema violations.
class ConfigError : public Error {
public:
    ConfigError(const std::string& path, const std::string& message)
        : Error(path.empty() ? message : path + ": " + message), path_(path), message_(message) {}

    const std::string& path() const noexcept { return path_; }
    const std::string& detail() const noexcept { return message_; }

private:
    std::string path_;
    std::string message_;
};

// Network is not a tree rooted at the slack bus.
class TopologyError : public Error {
public:
    using Error::Error;
};

// Conic program could not be assembled (dimension mismatch and the like).
class AssemblyError : public Error {
public:
    AssemblyError(const std::string& constraint, const std::string& message)
        : Error(constraint + ": " + message), constraint_(constraint) {}

    const std::string& constraint() const noexcept { return constraint_; }

private:
    std::string constraint_;
};

// Optimization problem has no feasible point. `families` lists the
// constraint families that needed relaxation.
class InfeasibleError : public Error {
public:
    InfeasibleError(const std::string& message, std::string families)
        : Error(message), families_(std::move(families)) {}

    const std::string& families() const noexcept { return families_; }

private:
    std::string families_;
};

// Interior-point method failed to reach the requested accuracy.
class SolverError : public Error {
public:
    using Error::Error;
};

}  // namespace dwc
