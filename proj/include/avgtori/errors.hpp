#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace avgtori {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Division by zero or a non-finite value while evaluating an expression.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Integration could not complete (step budget, step-size underflow).
class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// State left the finite region |z_i| <= blowup bound, or became non-finite.
class BlowUpError : public IntegrationError {
 public:
  BlowUpError(const std::string& what, double t) : IntegrationError(what), t_(t) {}
  double time() const { return t_; }

 private:
  double t_;
};

/// A section-map orbit escaped (blow-up or a tripped guard) at a given iterate.
class EscapeError : public IntegrationError {
 public:
  EscapeError(const std::string& what, long iterate) : IntegrationError(what), iterate_(iterate) {}
  long iterate() const { return iterate_; }

 private:
  long iterate_;
};

/// An analytic hypothesis required by the requested computation failed.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

/// Newton/shooting or quadrature failed to converge.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Invariant-curve detection failed (all seeds escaped, or the fit is not a
/// simple closed curve around its centre).
class DetectionError : public SolverError {
 public:
  using SolverError::SolverError;
};

/// A runtime validity guard tripped (e.g. parameter too large for a reduction).
class ValidityError : public Error {
 public:
  using Error::Error;
};

}  // namespace avgtori
