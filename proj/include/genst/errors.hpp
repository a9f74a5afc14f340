#pragma once

#include <stdexcept>
#include <string>

namespace genst {

// Raised for malformed input (bad column count, unknown label, missing header).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when well-formed input violates a documented invariant
// (duplicate ids, term missing from its reference, double tagging, ...).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace genst
