#pragma once

#include <stdexcept>
#include <string>

namespace vabal {

// Base for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A precondition of an operation was violated by the caller.
struct ContractError : Error {
  using Error::Error;
};

// Tensor shapes do not line up for the requested primitive.
struct ShapeError : Error {
  using Error::Error;
};

// A forward pass produced NaN/Inf or a likelihood became non-finite.
struct NumericError : Error {
  using Error::Error;
};

// Malformed CSV/JSON input; message carries the offending location.
struct ParseError : Error {
  using Error::Error;
};

}  // namespace vabal
