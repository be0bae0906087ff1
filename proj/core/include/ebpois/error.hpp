#pragma once

#include <stdexcept>
#include <string>

namespace ebpois {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (empty prior, bad tolerance, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// The requested quantity is undefined because f_G(y) == 0.
class DegenerateSupport : public Error {
 public:
  using Error::Error;
};

/// A table does not cover the range required by the computation.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// A parameter regime outside what the method supports (e.g. p <= 1 tuning).
class UnsupportedRegime : public Error {
 public:
  using Error::Error;
};

/// The requested moment of a prior family is infinite.
class MomentInfinite : public Error {
 public:
  using Error::Error;
};

/// A moment/Hankel sequence is numerically not positive definite.
class MomentDegeneracy : public Error {
 public:
  using Error::Error;
};

/// An iterative solver failed to reach its tolerance (strict mode only).
class NotConverged : public Error {
 public:
  using Error::Error;
};

}  // namespace ebpois
