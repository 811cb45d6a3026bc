#pragma once

#include <stdexcept>
#include <string>

namespace blowctl {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid parameter combination at configuration time.
struct ConfigError : Error {
    using Error::Error;
};

/// Field length does not match the grid it is used with.
struct DimensionError : Error {
    using Error::Error;
};

/// Argument outside the mathematical domain of a formula (e.g. log-time s <= 1).
struct DomainError : Error {
    using Error::Error;
};

/// A spatial window escapes the domain or the control region.
struct GeometryError : Error {
    using Error::Error;
};

/// Similarity frame with t >= T.
struct FrameError : Error {
    using Error::Error;
};

/// z-grid does not cover the support required by a projection.
struct CoverageError : Error {
    using Error::Error;
};

/// Recentering parameters outside the validity box.
struct RecenterError : Error {
    using Error::Error;
};

struct SolverError : Error {
    using Error::Error;
};

/// Evaluation outside the stored time range of a solution.
struct RangeError : Error {
    using Error::Error;
};

/// Loss of symmetry/positivity or overflow in a matrix computation.
struct NumericalError : Error {
    using Error::Error;
};

}  // namespace blowctl
