#pragma once

#include <stdexcept>
#include <string>

namespace ppslam {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonAntisymmetric : public Error {
 public:
  using Error::Error;
};

class NonUnitQuaternion : public Error {
 public:
  using Error::Error;
};

class DegenerateMatrix : public Error {
 public:
  using Error::Error;
};

class InvalidRotation : public Error {
 public:
  using Error::Error;
};

class SingularLambda : public Error {
 public:
  using Error::Error;
};

class ConfigInvalid : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// An error component left the open interval (-delta_under, delta_bar) * xi.
/// Carries the offending landmark/axis so a failed run can be diagnosed.
class EnvelopeViolation : public Error {
 public:
  EnvelopeViolation(const std::string& what, int landmark = -1, int axis = -1,
                    double ratio = 0.0)
      : Error(what), landmark_(landmark), axis_(axis), ratio_(ratio) {}

  int landmark() const noexcept { return landmark_; }
  int axis() const noexcept { return axis_; }
  /// e / xi at the moment of violation.
  double ratio() const noexcept { return ratio_; }

 private:
  int landmark_;
  int axis_;
  double ratio_;
};

}  // namespace ppslam
