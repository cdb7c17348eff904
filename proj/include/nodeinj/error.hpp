#pragma once

#include <stdexcept>
#include <string>

namespace nodeinj {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input files.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Matrix or graph dimensions that do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Arguments outside an operation's domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Raised when a query would exceed the configured query limit.
class QueryLimitExceeded : public Error {
 public:
  using Error::Error;
};

/// Wire-protocol violations and transport failures of a remote victim.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace nodeinj
