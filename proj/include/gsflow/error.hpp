#pragma once

#include <stdexcept>
#include <string>

namespace gsflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller violated a documented precondition (bad parameters, grid too short,
// point sets with duplicates, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// A numerical procedure failed to reach its tolerance.
class SolverError : public Error {
 public:
  using Error::Error;
};

// Unreadable or invalid configuration; the CLI maps it to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gsflow
