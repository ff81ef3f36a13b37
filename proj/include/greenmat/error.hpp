// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace greenmat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class MeshError : public Error {
 public:
  using Error::Error;
};

class CoefficientError : public Error {
 public:
  using Error::Error;
};

/// Raised when a linear solve fails; carries the residual history of the
/// attempt(s) that were made.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::vector<double> residuals)
      : Error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residual_history() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

class AnalysisError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace greenmat
