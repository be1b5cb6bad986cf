#pragma once

#include <stdexcept>
#include <string>

namespace cafda {

/// Base of every error the library throws on bad input or state.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unusable data: bad CSV cells, missing files, degenerate pools.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid or unknown configuration keys and values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An operation was called in a state that violates its precondition
/// (row already labeled, single-class pool, empty advice, ...).
class StateError : public Error {
 public:
  using Error::Error;
};

}  // namespace cafda
