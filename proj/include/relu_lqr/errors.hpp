#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace relu_lqr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs violate a documented precondition (positivity, ordering, ...).
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// The closed loop fails the spectral condition gamma * max(a1^2, a2^2) < 1,
/// so the value function is undefined.
class UnstableError : public Error {
 public:
  using Error::Error;
};

/// A simulated trajectory left the representable range.
class DivergedError : public Error {
 public:
  using Error::Error;
};

/// A finite-difference perturbation would straddle a ReLU or region kink.
class KinkTooCloseError : public Error {
 public:
  using Error::Error;
};

/// A training iterate left the spectral-stability region.
class UnstableIterateError : public Error {
 public:
  UnstableIterateError(const std::string& what, std::size_t last_safe_k)
      : Error(what), last_safe_k_(last_safe_k) {}

  std::size_t last_safe_k() const noexcept { return last_safe_k_; }

 private:
  std::size_t last_safe_k_;
};

/// The rate-fit window has too few usable points.
class DegenerateWindowError : public Error {
 public:
  using Error::Error;
};

/// A CSV file does not carry the expected schema header.
class SchemaMismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace relu_lqr
