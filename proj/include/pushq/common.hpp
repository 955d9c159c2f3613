#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pushq {

// Base of every error raised by the library. Each subclass corresponds to a
// distinct failure surface so callers can catch selectively.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- SQL front end ---
struct SyntaxError : Error {
    SyntaxError(std::size_t pos, const std::string& what)
        : Error("syntax error at position " + std::to_string(pos) + ": " + what), position(pos) {}
    std::size_t position;
};
struct UnsupportedFeature : Error {
    using Error::Error;
};
struct TypeError : Error {
    using Error::Error;
};
struct ColumnOutOfRange : Error {
    using Error::Error;
};

// --- object store ---
struct DuplicateName : Error {
    using Error::Error;
};
struct NoSuchObject : Error {
    using Error::Error;
};
struct RangeOutOfBounds : Error {
    using Error::Error;
};
struct ExpressionTooLarge : Error {
    using Error::Error;
};

// --- operators ---
struct NoSuchColumn : Error {
    using Error::Error;
};
struct IndexCorrupt : Error {
    using Error::Error;
};
struct InvalidRate : Error {
    using Error::Error;
};
struct NonIntegerJoinKey : Error {
    using Error::Error;
};
struct InvalidParams : Error {
    using Error::Error;
};
struct SampleTooSmall : Error {
    using Error::Error;
};
struct InvalidTheta : Error {
    using Error::Error;
};

// --- execution engine ---
struct NotAPath : Error {
    using Error::Error;
};
struct PlanError : Error {
    using Error::Error;
};
struct OperationCancelled : Error {
    OperationCancelled() : Error("operation cancelled") {}
};

}  // namespace pushq
