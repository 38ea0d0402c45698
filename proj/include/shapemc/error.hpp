#pragma once

#include <stdexcept>
#include <string>

namespace shapemc {

// Base for all library errors. Subclasses let callers distinguish the
// recoverable cases (a degenerate curve during sampling) from bad input.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Mask or field with only one region: no curve to speak of.
class DegenerateShape : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace shapemc
