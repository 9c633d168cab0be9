#pragma once

#include <stdexcept>
#include <string>

namespace poleval {

// Error taxonomy shared by library and CLI. The CLI maps each class to a
// distinct exit code (see tools/).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable/unwritable files, malformed file encodings.
class IoError : public Error {
 public:
  using Error::Error;
};

// Schema or configuration violations: unknown columns, bad roles/kinds,
// malformed config keys.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Data that parses but breaks a contract: non-binary treatment values,
// duplicate ids, empty arms, out-of-bounds years.
class DataError : public Error {
 public:
  using Error::Error;
};

// Numerical failures: separation, rank deficiency, underflow guards,
// degenerate propensities.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace poleval
