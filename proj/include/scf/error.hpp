#pragma once

#include <stdexcept>
#include <string>

namespace scf {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated (bad shape, bad flag value...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Reading or writing a file failed, or a file did not parse.
class IoError : public Error {
 public:
  using Error::Error;
};

// A computation produced a non-finite value.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace scf
