#pragma once

#include <stdexcept>
#include <string>

namespace eqforge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user configuration: duplicate names, invalid parameters, unknown keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input too short for the requested stencil or shape mismatch.
class SizeError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Requested outlier exclusion cannot be satisfied (S > (1-p)N).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class EmptyModelError : public Error {
 public:
  using Error::Error;
};

class UnsupportedFormError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace eqforge
