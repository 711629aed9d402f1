#pragma once

#include <cstddef>
#include <exception>
#include <stdexcept>
#include <string>

namespace pimns {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NaN/Inf where a finite value is required.
class InvalidValueError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid model/run configuration or mismatched dimensions between values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Sequence does not fit the model context.
class LengthError : public Error {
 public:
  using Error::Error;
};

class CheckpointFormatError : public Error {
 public:
  using Error::Error;
};

/// Caller passed an argument outside the operation's domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

class RenderError : public Error {
 public:
  using Error::Error;
};

class RegistryError : public Error {
 public:
  using Error::Error;
};

/// Malformed dataset line. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input missing a required field or carrying a bad value.
class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, const std::string& field, const std::string& what)
      : Error((line ? "line " + std::to_string(line) + ": " : std::string()) + "field '" + field +
              "': " + what),
        line_(line),
        field_(field) {}
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Statistics requested over a run that generated nothing.
class EmptyRunError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Wraps a per-example failure inside an experiment run. cause() rethrows
/// as the original exception type.
class ExampleError : public Error {
 public:
  ExampleError(std::string example_id, const std::string& what, std::exception_ptr cause = nullptr)
      : Error("example '" + example_id + "': " + what), example_id_(std::move(example_id)), cause_(std::move(cause)) {}
  const std::string& example_id() const { return example_id_; }
  std::exception_ptr cause() const { return cause_; }

 private:
  std::string example_id_;
  std::exception_ptr cause_;
};

}  // namespace pimns
