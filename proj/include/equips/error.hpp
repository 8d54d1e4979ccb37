#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace equips {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument, malformed input, or violated precondition.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// File-system or format failure; carries the offending path.
class IoError : public Error {
public:
  IoError(std::string path, const std::string &what)
      : Error(path + ": " + what), path_(std::move(path)) {}

  const std::string &path() const noexcept { return path_; }

private:
  std::string path_;
};

/// Iterative solve ran out of iterations before reaching its tolerance.
class SolverError : public Error {
public:
  SolverError(const std::string &what, std::vector<double> residual_history)
      : Error(what), residual_history_(std::move(residual_history)) {}

  const std::vector<double> &residual_history() const noexcept {
    return residual_history_;
  }

private:
  std::vector<double> residual_history_;
};

} // namespace equips
