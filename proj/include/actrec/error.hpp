#pragma once

#include <stdexcept>
#include <string>

namespace actrec {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input document. The message names the line or element.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A referenced frame, activity or category does not exist.
class LookupError : public Error {
 public:
  using Error::Error;
};

// Not enough data to carry out the requested estimate.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

}  // namespace actrec
