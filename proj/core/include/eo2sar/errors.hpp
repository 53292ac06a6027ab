#pragma once

#include <stdexcept>
#include <string>

namespace eo2sar {

// Error taxonomy. The CLI maps these onto its exit codes: configuration
// and shape problems exit 2, data/file problems exit 3, numeric failures
// exit 4 (see tools/eo2sar.cpp).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid parameter or configuration value.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Tensor shape mismatch between operands; message names both shapes.
class DimensionError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Problems with input data: manifests, images, labels.
class DataError : public Error {
public:
    using Error::Error;
};

// Malformed or truncated on-disk artifacts (checkpoints, reports).
class FormatError : public DataError {
public:
    using DataError::DataError;
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace eo2sar
