#pragma once

#include <stdexcept>
#include <string>

namespace choreokit {

// Base class for every error raised by the library. The CLI maps the
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (JSON syntax, bad numbers, truncated records).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Structurally valid input whose shape does not match the expected schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A documented invariant of an operation's input does not hold.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// Binary container problems: bad magic, unsupported version, truncation.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite values during training or inference.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace choreokit
