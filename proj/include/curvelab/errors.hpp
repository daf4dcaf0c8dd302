// SPDX-License-Identifier: Apache-2.0
//
// Exception hierarchy shared by every curvelab module.
#pragma once

#include <stdexcept>
#include <string>

namespace curvelab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Requested derivative order exceeds the curve's declared budget.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class SingularFrameError : public Error {
 public:
  SingularFrameError(const std::string& what, double det)
      : Error(what + " (|det| = " + std::to_string(det) + ")"), det_(det) {}
  double det() const noexcept { return det_; }

 private:
  double det_;
};

class NotFiniteTypeError : public Error {
 public:
  using Error::Error;
};

// Adaptive quadrature failed to reach its tolerance within the depth cap.
class ToleranceError : public Error {
 public:
  using Error::Error;
};

// Oscillatory rule would need more nodes than the configured budget.
class RefinementError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace curvelab
