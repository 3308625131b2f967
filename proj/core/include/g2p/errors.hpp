#pragma once

#include <stdexcept>
#include <string>

namespace g2p {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data or arguments violate a documented contract. Maps to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A file parsed but lacks required properties or uses an unsupported layout.
class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class PreconditionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Filesystem or stream failure. Maps to exit code 2.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace g2p
