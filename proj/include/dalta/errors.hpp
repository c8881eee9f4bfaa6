#pragma once

#include <stdexcept>
#include <string>

namespace dalta {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Malformed input data (bad JSONL record, bad vocab header, bad checkpoint).
class FormatError : public Error {
public:
    using Error::Error;
};

// Invalid configuration or precondition violation at the config level.
class ConfigError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// Non-finite values where finite ones are required; message names the layer.
class NumericError : public Error {
public:
    using Error::Error;
};

// Training produced non-finite losses or gradients.
class TrainingDivergence : public Error {
public:
    using Error::Error;
};

// Checkpoint/vocabulary hash mismatch.
class CompatibilityError : public Error {
public:
    using Error::Error;
};

class SampleSizeError : public Error {
public:
    using Error::Error;
};

} // namespace dalta
