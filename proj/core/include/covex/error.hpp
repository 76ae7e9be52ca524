#ifndef COVEX_ERROR_HPP
#define COVEX_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace covex {

// Root of every error the library throws. The CLI maps the three families
// (config, data, model) onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

// Malformed record in a line-oriented file.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line, const std::string& source = {})
      : DataError((source.empty() ? "line " + std::to_string(line) : source + ":" + std::to_string(line)) +
                  ": " + what),
        line_(line),
        detail_(what) {}
  std::size_t line() const { return line_; }
  // The message without the location prefix.
  const std::string& detail() const { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

// Well-formed record with content outside the schema (unknown event, label...).
class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

// Offsets or references that do not agree with the data they point into.
class ValidationError : public DataError {
 public:
  ValidationError(const std::string& what, std::string tweet_id)
      : DataError(what), tweet_id_(std::move(tweet_id)) {}
  const std::string& tweet_id() const { return tweet_id_; }

 private:
  std::string tweet_id_;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

// The fetcher could not reach its backend. Distinct from "tweet not found";
// the operation may be retried.
class TransportError : public DataError {
 public:
  using DataError::DataError;
  bool retryable() const { return true; }
};

class AlignmentError : public DataError {
 public:
  using DataError::DataError;
};

class ChunkerError : public DataError {
 public:
  ChunkerError(const std::string& what, std::string tweet_id)
      : DataError("tweet " + tweet_id + ": " + what), tweet_id_(std::move(tweet_id)) {}
  const std::string& tweet_id() const { return tweet_id_; }

 private:
  std::string tweet_id_;
};

class ShapeError : public ModelError {
 public:
  using ModelError::ModelError;
};

}  // namespace covex

#endif  // COVEX_ERROR_HPP
