#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hofsurf {

// Base for every error raised by the library. Callers that only care about
// "something failed" catch this; the subclasses carry the category.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tensor shapes do not agree for an operation.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Argument outside an operation's domain (empty set, n = 0, degenerate face...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Caller broke an API contract (wrong parameter count, non-scalar loss...).
class ContractError : public Error {
public:
    using Error::Error;
};

// Non-finite value produced during a computation.
class NumericalError : public Error {
public:
    using Error::Error;
};

// File could not be opened, read or written.
class IoError : public Error {
public:
    IoError(const std::string& path, const std::string& what)
        : Error(path + ": " + what), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

// Malformed file contents. `location` is a line number for text formats and a
// byte offset for binary ones.
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t location, const std::string& what,
               bool is_byte_offset = false)
        : Error(source + (is_byte_offset ? ": byte " : ":") + std::to_string(location) + ": " +
                what),
          location_(location) {}

    std::size_t location() const noexcept { return location_; }

private:
    std::size_t location_;
};

} // namespace hofsurf
