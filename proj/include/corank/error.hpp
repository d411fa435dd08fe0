#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace corank {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input line (unparseable JSON).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A required field is missing, has the wrong type, or carries an invalid value.
class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, const std::string& field, const std::string& what)
      : Error("line " + std::to_string(line) + ": field \"" + field + "\": " + what),
        line_(line),
        field_(field) {}

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

class DuplicateError : public Error {
 public:
  DuplicateError(const std::string& tweet_id, std::size_t line)
      : Error("line " + std::to_string(line) + ": duplicate tweet_id \"" + tweet_id + "\""),
        tweet_id_(tweet_id) {}

  const std::string& tweet_id() const { return tweet_id_; }

 private:
  std::string tweet_id_;
};

}  // namespace corank
