#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gyromat {

// Root of everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Input outside the domain of a matrix function (e.g. log of a
// non-positive eigenvalue).
class DomainError : public Error {
 public:
  DomainError(const std::string& what, double offending)
      : Error(what), offending_(offending) {}
  explicit DomainError(const std::string& what) : Error(what) {}
  double offending() const { return offending_; }

 private:
  double offending_ = 0.0;
};

class NotPositiveDefiniteError : public Error {
 public:
  NotPositiveDefiniteError(const std::string& what, std::size_t pivot)
      : Error(what), pivot_(pivot) {}
  std::size_t pivot() const { return pivot_; }

 private:
  std::size_t pivot_;
};

class RankError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// A principal angle reached pi/2; Log is undefined there.
class CutLocusError : public Error {
 public:
  using Error::Error;
};

class DegenerateHyperplaneError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOpError : public Error {
 public:
  using Error::Error;
};

class ConditioningError : public Error {
 public:
  using Error::Error;
};

// Non-finite value produced or consumed where finite values are required.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class TypeError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gyromat
