#pragma once

#include <stdexcept>
#include <string>

namespace mm {

// Malformed or missing input files, invalid datasets.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Degenerate embeddings, non-finite gradients.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid arguments or violated preconditions of a configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A sampled batch yielded no usable patches.
class EmptyBatchError : public DataError {
public:
    using DataError::DataError;
};

// Fewer than two distinct labels; no triplet can be formed.
class TripletError : public DataError {
public:
    using DataError::DataError;
};

}  // namespace mm
