#pragma once

#include <stdexcept>
#include <string>

namespace fvarseg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  /// Process exit code the CLI maps this error to.
  [[nodiscard]] virtual int exit_code() const noexcept { return 1; }
};

/// Invalid configuration or tuning parameter (bandwidth plan, thresholds, grid).
class ConfigError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] int exit_code() const noexcept override { return 2; }
};

/// Malformed or degenerate input data.
class DataError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] int exit_code() const noexcept override { return 3; }
};

/// A numerical consistency check failed (residues, solver breakdown).
class NumericalError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] int exit_code() const noexcept override { return 4; }
};

/// Window or index outside the admissible range.
class RangeError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] int exit_code() const noexcept override { return 2; }
};

/// Caller violated a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] int exit_code() const noexcept override { return 2; }
};

namespace detail {

template <class E>
inline void require(bool ok, const std::string& what) {
  if (!ok) throw E(what);
}

}  // namespace detail
}  // namespace fvarseg
