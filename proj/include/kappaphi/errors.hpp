#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kappaphi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A planar transform could not be inverted for the given parameters.
class SingularTransform : public Error {
 public:
  using Error::Error;
};

class NotPsd : public Error {
 public:
  using Error::Error;
};

/// Covariance stayed indefinite after one jitter retry.
class CholeskyFailure : public Error {
 public:
  using Error::Error;
};

class ZeroTurnRate : public Error {
 public:
  using Error::Error;
};

class InvalidModel : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NonMonotoneTime : public Error {
 public:
  NonMonotoneTime(std::size_t index, const std::string& what)
      : Error(what), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Wraps an error raised while filtering step `step`.
class StepError : public Error {
 public:
  StepError(std::size_t step, const std::string& what)
      : Error("step " + std::to_string(step) + ": " + what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Wraps an error raised inside Monte Carlo run `run`.
class RunError : public Error {
 public:
  RunError(std::size_t run, const std::string& what)
      : Error("run " + std::to_string(run) + ": " + what), run_(run) {}

  std::size_t run() const noexcept { return run_; }

 private:
  std::size_t run_;
};

}  // namespace kappaphi
