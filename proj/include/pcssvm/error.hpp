#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pcssvm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. `line()` is 1-based; 0 when the error is not tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Precondition on a dataset (class counts, shapes) not met.
class DataError : public Error {
public:
    using Error::Error;
};

/// Invalid experiment configuration or CLI arguments.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace pcssvm
