#pragma once

#include <stdexcept>
#include <string>

namespace pqc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or polynomial sizes that do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain an operation accepts.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed or schema-invalid input document. `path` is a JSON pointer to
/// the offending field.
class ParseError : public Error {
 public:
  enum class Kind { Syntax, Schema, IndexRange, ExponentLength };

  ParseError(Kind kind, std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), kind_(kind), path_(std::move(path)) {}
  Kind kind() const { return kind_; }
  const std::string& path() const { return path_; }

 private:
  Kind kind_;
  std::string path_;
};

}  // namespace pqc
