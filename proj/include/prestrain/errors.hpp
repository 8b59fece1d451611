#pragma once

#include <stdexcept>
#include <string>

namespace prestrain {

/// Base class for every error raised by the library. The category is a short
/// machine-parsable token that the CLI prints verbatim.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& what)
        : std::runtime_error(what), category_(std::move(category)) {}

    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

struct SingularMatrixError : Error {
    explicit SingularMatrixError(const std::string& what) : Error("singular-matrix", what) {}
};

struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error("domain", what) {}
};

struct DegenerateElementError : Error {
    explicit DegenerateElementError(const std::string& what) : Error("degenerate-element", what) {}
};

struct SolverError : Error {
    explicit SolverError(const std::string& what) : Error("solver", what) {}
};

struct LineSearchError : Error {
    explicit LineSearchError(const std::string& what) : Error("line-search", what) {}
};

struct RefinementError : Error {
    explicit RefinementError(const std::string& what) : Error("refinement", what) {}
};

struct FitError : Error {
    explicit FitError(const std::string& what) : Error("fit", what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error("config", what) {}
};

}  // namespace prestrain
