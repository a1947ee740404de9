#ifndef DELAYCAST_ERROR_HPP
#define DELAYCAST_ERROR_HPP

#include <stdexcept>
#include <string>

namespace delaycast {

/// Base class for every error raised by the library. `code()` is a short
/// machine-readable tag used by the command-line tool.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error("shape", what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error("parse", what) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error("schema", what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error("data", what) {}
};

class ModelFileError : public Error {
 public:
  ModelFileError(std::string code, const std::string& what)
      : Error(std::move(code), what) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what) : Error("training", what) {}
};

}  // namespace delaycast

#endif  // DELAYCAST_ERROR_HPP
