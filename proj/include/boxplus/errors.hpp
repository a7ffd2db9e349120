#pragma once

#include <stdexcept>
#include <string>

namespace boxplus {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid mathematical input: malformed measures, parameters outside the
// admissible region, points not in the upper half plane.
struct DomainError : Error {
    using Error::Error;
};

// Matrix or vector sizes that do not line up.
struct DimensionError : Error {
    using Error::Error;
};

// Unreadable input files (measure lists, JSON configs).
struct ParseError : Error {
    using Error::Error;
};

// Iterative solve ran out of iterations before reaching tolerance.
struct NotConverged : Error {
    using Error::Error;
};

// The 2x2 stability system is numerically singular at the queried point.
struct SingularJacobian : Error {
    using Error::Error;
};

// A perturbation-bound query whose preconditions do not hold
// (perturbed point left the upper half plane, or is too far away).
struct HypothesisFailed : Error {
    using Error::Error;
};

// Column decomposition hit the measure-zero configuration it cannot
// normalize (pivot entry of the sampled column is numerically zero).
struct DegenerateColumn : Error {
    using Error::Error;
};

// A filter matched nothing (e.g. no eigenvalues inside the window).
struct EmptySelection : Error {
    using Error::Error;
};

// Not enough usable points for a fit or summary statistic.
struct InsufficientData : Error {
    using Error::Error;
};

}  // namespace boxplus
