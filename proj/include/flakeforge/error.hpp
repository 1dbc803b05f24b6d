#pragma once

#include <stdexcept>
#include <string>

namespace flakeforge {

// Error taxonomy used across the library. The CLI maps all of these to exit
// code 2; exit code 1 is reserved for command-line usage errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error      { using Error::Error; };  // malformed input file
struct ValidationError : Error { using Error::Error; };  // well-formed but invalid data
struct RangeError : Error      { using Error::Error; };  // query outside tabulated range
struct DomainError : Error     { using Error::Error; };  // argument outside operation domain
struct ShapeError : Error      { using Error::Error; };  // mismatched grid/image dimensions
struct ConfigError : Error     { using Error::Error; };  // bad run configuration
struct IoError : Error         { using Error::Error; };  // filesystem / codec failure

} // namespace flakeforge
