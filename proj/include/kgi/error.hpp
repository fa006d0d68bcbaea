#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgi {

// Base for every error the toolkit raises on bad input or misuse.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

// Malformed input text. line is 1-based, 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}
    std::size_t line() const noexcept { return line_; }
    const char* kind() const noexcept override { return "parse_error"; }

private:
    std::size_t line_;
};

class ValidationError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "validation_error"; }
};

// Unknown entity, relation or rule name.
class LookupError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "lookup_error"; }
};

class NotFoundError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "not_found"; }
};

class ConflictError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "conflict"; }
};

// Input file missing or unreadable.
class FileError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "file_error"; }
};

}  // namespace kgi
