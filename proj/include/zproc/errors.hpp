#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace zproc {

// Base class for failures of the numerical pipeline (exit code 3 in the CLI).
class NumericsError : public std::runtime_error {
public:
    explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

// Bad user input: malformed files, out-of-range configuration, degenerate
// sample sizes (exit code 2 in the CLI).
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

class NotPositiveDefinite : public NumericsError {
public:
    NotPositiveDefinite(int pivot_index, double pivot_value)
        : NumericsError("matrix not positive definite: pivot " +
                        std::to_string(pivot_index) + " = " + std::to_string(pivot_value)),
          pivot_index(pivot_index),
          pivot_value(pivot_value) {}

    int pivot_index;
    double pivot_value;
};

// Carries the last iterate so callers can report where the solver got stuck.
struct IterateDiagnostics {
    std::array<double, 16> last_iterate{};
    int dim = 0;
    double last_residual = 0.0;
    int iterations = 0;
};

class SingularJacobian : public NumericsError {
public:
    SingularJacobian(const std::string& what, IterateDiagnostics diag)
        : NumericsError(what), diagnostics(diag) {}

    IterateDiagnostics diagnostics;
};

class NoConvergence : public NumericsError {
public:
    NoConvergence(const std::string& what, IterateDiagnostics diag)
        : NumericsError(what), diagnostics(diag) {}

    IterateDiagnostics diagnostics;
};

class DimensionMismatch : public NumericsError {
public:
    DimensionMismatch(const std::string& what) : NumericsError(what) {}
};

class EmptyRiskSet : public NumericsError {
public:
    explicit EmptyRiskSet(double at_time)
        : NumericsError("empty risk set at event time " + std::to_string(at_time)) {}
};

class TooFewEvents : public NumericsError {
public:
    TooFewEvents(std::size_t events, std::size_t needed)
        : NumericsError("survival data has " + std::to_string(events) +
                        " events, need at least " + std::to_string(needed)) {}
};

}  // namespace zproc
