#pragma once

#include <stdexcept>
#include <string>

namespace dash {

/// Root of every error thrown by the library. The CLI maps subclasses to
/// exit codes (see ExitCode in tools/).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape or extent mismatch between operands.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A scalar argument outside its admissible range.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Object used in the wrong state (stale cache, empty ensemble).
class StateError : public Error {
public:
    using Error::Error;
};

/// Class label outside [0, M).
class IndexError : public Error {
public:
    using Error::Error;
};

/// NaN or Inf produced where a finite value is required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Malformed input file (ragged rows, bad cells, empty file, I/O failure).
class DataError : public Error {
public:
    using Error::Error;
};

/// Serialized document does not match the expected schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Configuration document with an invalid or unknown field. The field name
/// is kept separately so callers can report it.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error("config field '" + field + "': " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

} // namespace dash
