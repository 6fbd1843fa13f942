// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace curvefold {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidCurve : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DegenerateShape : public Error {
 public:
  using Error::Error;
};

class LengthTooShort : public Error {
 public:
  using Error::Error;
};

/// Sketch and model lengths disagree inside a guided step.
class GuidanceShapeError : public DimensionError {
 public:
  using DimensionError::DimensionError;
};

class EmptyStructure : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// PDB text could not be read; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Raised when a denoiser fails (throws or returns non-finite output) at a
/// given diffusion step.
class DenoiserFailure : public Error {
 public:
  DenoiserFailure(int step, const std::string& what)
      : Error("denoiser failed at step " + std::to_string(step) + ": " + what), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

/// Request payload validation failure; `field` is a JSON-pointer-like path.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace curvefold
