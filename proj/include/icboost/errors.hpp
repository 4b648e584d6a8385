#pragma once

#include <stdexcept>
#include <string>

namespace icboost {

// Input data violates its contract (bad cell, non-finite value, size mismatch).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// File layout does not match the declared schema (missing column, no features).
class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

// A persisted artifact (model file, config file) could not be parsed.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace icboost
