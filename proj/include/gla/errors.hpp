#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gla {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// A class index with no labelled examples where the operation needs some.
class MissingClassError : public Error {
 public:
  explicit MissingClassError(std::size_t class_index)
      : Error("class " + std::to_string(class_index) + " has no labelled examples"),
        class_index_(class_index) {}

  std::size_t class_index() const noexcept { return class_index_; }

 private:
  std::size_t class_index_;
};

class OptimizationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Files that cannot be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Bad or unknown configuration keys, unreadable config documents.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gla
