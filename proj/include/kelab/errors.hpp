#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kelab {

// Input is well formed but describes a problem the solvers cannot accept
// (non-integrable right side, wrong slopes, non-integral degree, ...).
class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double last_residual)
        : std::runtime_error(what), residual_(last_residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class FiberSolveError : public std::runtime_error {
public:
    FiberSolveError(const std::string& what, std::size_t fiber)
        : std::runtime_error(what), fiber_(fiber) {}
    std::size_t fiber_index() const noexcept { return fiber_; }

private:
    std::size_t fiber_;
};

}  // namespace kelab
