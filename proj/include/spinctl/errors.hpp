#pragma once

#include <stdexcept>
#include <string>

namespace spinctl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument outside the domain of a mathematical function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// qlog of -1: rotation by pi with no preferred axis.
class AmbiguousAxis : public Error {
 public:
  using Error::Error;
};

/// The m-equation hit the cot(eps m / 2) pole at eps |m| = 2 pi.
class SingularCot : public Error {
 public:
  SingularCot(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class UnsupportedOrder : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class NotPSD : public Error {
 public:
  NotPSD(const std::string& what, double min_eigenvalue)
      : Error(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class AxisRequired : public Error {
 public:
  using Error::Error;
};

/// Monte Carlo estimate requested with fewer than two samples.
class DegenerateSample : public Error {
 public:
  using Error::Error;
};

/// Line search could not make progress. The last iterate is kept by the caller.
class NoDescent : public Error {
 public:
  using Error::Error;
};

class BCUnreachable : public Error {
 public:
  using Error::Error;
};

}  // namespace spinctl
