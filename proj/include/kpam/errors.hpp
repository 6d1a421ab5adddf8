#pragma once

#include <stdexcept>
#include <string>

namespace kpam {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A direction argument was expected to have unit norm.
class NonUnitDirection : public Error {
 public:
  using Error::Error;
};

// Two points defining an axis coincide within tolerance.
class DegenerateAxis : public Error {
 public:
  using Error::Error;
};

// A term references a keypoint name not present in the bound set.
class UnknownKeypoint : public Error {
 public:
  using Error::Error;
};

// A Problem fails structural validation (empty, unresolved references).
class InvalidProblem : public Error {
 public:
  using Error::Error;
};

// Point sets are collinear/coincident where a well-posed fit is required.
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

// Two keypoint sets were expected to carry the same names.
class NameMismatch : public Error {
 public:
  using Error::Error;
};

// Input bytes are not well-formed (JSON syntax, binary framing).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Input is well-formed but semantically invalid; message carries the
// offending field path.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A task spec requires keypoints absent from the supplied set; message
// lists every missing name.
class MissingKeypoint : public Error {
 public:
  using Error::Error;
};

// An operation was asked of a category it is not defined for.
class NotApplicable : public Error {
 public:
  using Error::Error;
};

// A heatmap's probability mass deviates from 1 beyond the repair band.
class UnnormalizedHeatmap : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class NonPositiveDepth : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

}  // namespace kpam
