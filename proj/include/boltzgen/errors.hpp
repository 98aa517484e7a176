#pragma once

#include <stdexcept>
#include <string>

namespace boltzgen {

/// Base class for all library errors. The CLI maps the concrete types
/// onto its documented exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Unresolved or duplicate class names.
struct NameError : Error {
  using Error::Error;
};

/// A numeric parameter is out of range, or an evaluation diverged where
/// convergence was required (x at or beyond the singularity, n below the
/// minimum size, ...).
struct ParameterError : Error {
  using Error::Error;
};

/// A configured cap was exceeded (trial counts, retained-structure memory,
/// node guards).
struct ResourceError : Error {
  using Error::Error;
};

/// A condition that validated input should have made impossible.
struct InternalError : Error {
  using Error::Error;
};

}  // namespace boltzgen
