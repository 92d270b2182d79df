#pragma once

#include <stdexcept>
#include <string>

namespace zoomspec {

// Base of every error the library throws. The CLI maps the concrete type to
// its exit code (validation 1, I/O 2, invariant 3).
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed file content, out-of-range parameter, violated
// precondition.
class ValidationError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

// An internal postcondition failed. Seeing one of these is a bug.
class InvariantError : public Error {
public:
  using Error::Error;
};

} // namespace zoomspec
