#pragma once

#include <stdexcept>
#include <string>

namespace seqmod {

/// Root of all library errors. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed arguments that violate a documented precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Unknown config key, bad flag value, malformed option.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// File does not follow the declared on-disk format (magic, version, header).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Payload shorter or longer than the header declares.
class SizeError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Well-formed file carrying values that break a data invariant.
class DataError : public Error {
 public:
  using Error::Error;
};

class StaleInputError : public DataError {
 public:
  using DataError::DataError;
};

class CurationError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class InferenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace seqmod
