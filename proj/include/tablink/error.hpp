#pragma once

#include <stdexcept>
#include <string>

namespace tablink {

// Base of every error the library throws. Callers that only need to
// distinguish user errors from I/O failures can catch the two subclasses
// below; the CLI maps them to exit codes 1 and 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input supplied by the user: bad ids, configs, tables, flags.
class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

enum class ConfigErrorKind { unresolved_type_name, tier_conflict, bad_weights, bad_param, malformed };

class ConfigError : public ValidationError {
public:
    ConfigError(ConfigErrorKind kind, const std::string& what)
        : ValidationError(what), kind_(kind) {}

    ConfigErrorKind kind() const noexcept { return kind_; }

private:
    ConfigErrorKind kind_;
};

class EmptyMention : public ValidationError {
public:
    EmptyMention() : ValidationError("mention is empty after normalization and stopword removal") {}
};

class IndexUnavailable : public IoError {
public:
    using IoError::IoError;
};

class GoldMismatch : public ValidationError {
public:
    using ValidationError::ValidationError;
};

}  // namespace tablink
