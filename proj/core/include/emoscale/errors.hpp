#pragma once

#include <stdexcept>
#include <string>

namespace emoscale {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shapes that do not line up for an operation.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Invalid hyperparameters or configuration values.
class ParameterError : public Error {
public:
    using Error::Error;
};

// Bad or insufficient input data (empty datasets, indivisible lengths...).
class InputError : public Error {
public:
    using Error::Error;
};

// Malformed files; messages name the row and column.
class ParseError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

// Caller broke an API contract (e.g. backward on a non-scalar).
class ContractError : public Error {
public:
    using Error::Error;
};

// Training stopped because a loss or gradient became non-finite.
class TrainingAborted : public Error {
public:
    using Error::Error;
};

}  // namespace emoscale
