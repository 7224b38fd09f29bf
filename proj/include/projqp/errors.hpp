#pragma once

#include <stdexcept>
#include <string>

namespace projqp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class RankDeficient : public Error {
 public:
  using Error::Error;
};

/// Raised by qr_append_column when the new column lies in the current span.
class DependentColumn : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class PreconditionViolated : public Error {
 public:
  using Error::Error;
};

class IterationLimit : public Error {
 public:
  using Error::Error;
};

class PointInsideSet : public Error {
 public:
  using Error::Error;
};

class DegenerateAggregate : public Error {
 public:
  using Error::Error;
};

class NonPositiveDistance : public Error {
 public:
  using Error::Error;
};

}  // namespace projqp
