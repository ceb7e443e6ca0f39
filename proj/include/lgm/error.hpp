#pragma once

#include <stdexcept>
#include <string>

namespace lgm {

//! Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

//! Input data violates a documented invariant (non-finite values, malformed
//! files, degenerate columns, label mismatches).
class DataError : public Error {
public:
  using Error::Error;
};

//! An argument is outside its documented domain.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

//! A numerical procedure failed (non-finite loss, EM collapse, ...).
class NumericError : public Error {
public:
  using Error::Error;
};

}  // namespace lgm
