#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cig {

/// Base of every error raised by the environment.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. `offset` is a byte offset into the source.
class SyntaxError : public Error {
public:
    SyntaxError(std::size_t offset, const std::string& message)
        : Error("at offset " + std::to_string(offset) + ": " + message), offset_(offset), message_(message)
    {}

    std::size_t offset() const { return offset_; }
    const std::string& detail() const { return message_; }

private:
    std::size_t offset_;
    std::string message_;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class NotFound : public Error {
public:
    using Error::Error;
};

class Conflict : public Error {
public:
    using Error::Error;
};

class TypeMismatch : public Error {
public:
    using Error::Error;
};

class InvalidState : public Error {
public:
    using Error::Error;
};

}  // namespace cig
