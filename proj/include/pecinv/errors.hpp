#pragma once

#include <stdexcept>
#include <string>

namespace pecinv {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Sample vectors whose length does not match the grid, mismatched grids, etc.
struct ShapeError : Error {
  using Error::Error;
};

/// Query outside the tabulated radial range.
struct RangeError : Error {
  using Error::Error;
};

/// Requested more bound states than the potential supports.
struct TooFewBoundStates : Error {
  int n_found;
  TooFewBoundStates(const std::string& msg, int found) : Error(msg), n_found(found) {}
};

/// Morse fit cannot proceed (e.g. non-positive anharmonicity).
struct FitInfeasible : Error {
  using Error::Error;
};

/// Not enough input data for the requested fit.
struct InsufficientData : Error {
  using Error::Error;
};

/// A 1D minimizer landed on a search-window boundary.
struct BoundaryHit : Error {
  using Error::Error;
};

/// A scoring region selects no grid points.
struct EmptyRegion : Error {
  using Error::Error;
};

/// Inversion density below cutoff everywhere.
struct NoSupport : Error {
  using Error::Error;
};

/// NaN/Inf encountered during inversion.
struct NumericalFailure : Error {
  using Error::Error;
};

/// Bad configuration value (unknown method name, bad units, ...).
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace pecinv
