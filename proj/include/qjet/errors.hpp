#pragma once

#include <stdexcept>
#include <string>

namespace qjet {

// Base for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operand shapes incompatible with the requested operation.
struct DimensionError : Error {
    using Error::Error;
};

// Singular/ill-conditioned matrices, divergent training, non-finite values.
struct NumericalError : Error {
    using Error::Error;
};

// A documented precondition was violated (non-Hermitian input, non-scalar
// loss, asymmetric edge matrix, ...).
struct ContractViolation : Error {
    using Error::Error;
};

// Key absent from an embedded table (e.g. unknown PDG id).
struct LookupError : Error {
    using Error::Error;
};

// Bad user input: malformed files, inconsistent configuration. CLI exit 2.
struct ValidationError : Error {
    using Error::Error;
};

// Filesystem-level failure. CLI exit 1.
struct IoError : Error {
    using Error::Error;
};

} // namespace qjet
