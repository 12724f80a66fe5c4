#pragma once

#include <stdexcept>
#include <string>

namespace hunt {

/// Failure category. The CLI maps each one to a process exit code.
enum class ErrorKind { usage, data, io, unsupported };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Malformed, inconsistent or out-of-contract data.
class DataError : public Error {
public:
    explicit DataError(const std::string& message) : Error(ErrorKind::data, message) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& message) : Error(ErrorKind::io, message) {}
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& message) : Error(ErrorKind::usage, message) {}
};

/// Raised when an optional capability (e.g. Parquet) is compiled out or a
/// file uses a feature the reader does not handle.
class UnsupportedFormat : public Error {
public:
    explicit UnsupportedFormat(const std::string& message)
        : Error(ErrorKind::unsupported, message) {}
};

const char* to_string(ErrorKind kind) noexcept;

} // namespace hunt
