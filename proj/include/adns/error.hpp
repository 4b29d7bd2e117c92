#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adns {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Precondition or shape violation in caller-supplied data.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// An iterative routine failed to converge or produced non-finite values.
class NumericalError : public Error {
  public:
    using Error::Error;
};

/// A metric was requested that is undefined for the given input (e.g. BWT with one task).
class UndefinedMetricError : public Error {
  public:
    using Error::Error;
};

/// An internal invariant was broken; indicates a bug rather than bad input.
class InternalError : public Error {
  public:
    using Error::Error;
};

class ParseError : public Error {
  public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

class IoError : public Error {
  public:
    IoError(std::string path, const std::string& what)
        : Error(path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

  private:
    std::string path_;
};

/// Invalid experiment configuration; `key()` names the offending entry.
class ConfigError : public Error {
  public:
    ConfigError(std::string key, const std::string& what)
        : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

  private:
    std::string key_;
};

}  // namespace adns
