#pragma once

#include <stdexcept>
#include <string>

namespace segfuse {

// Base of every error thrown by the library. Subclasses let callers (the CLI
// in particular) map failures to exit codes without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file contents (bad magic, unparsable header, truncated payload).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Well-formed data whose dtype, rank or shape does not fit the requested role.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A value-level invariant is violated (probability sums, ranges, parameters).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure; the message carries the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace segfuse
