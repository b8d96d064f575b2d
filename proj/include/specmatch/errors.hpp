#pragma once

#include <stdexcept>
#include <string>

namespace specmatch {

/// Dimension or count precondition violated (wrong block size, too few bins, ...).
class SizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Value precondition violated (negative exponent, zero-norm token, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Required spatial grid shape is missing or inconsistent.
class ShapeError : public SizeError {
 public:
  using SizeError::SizeError;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File contents are malformed.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace specmatch
