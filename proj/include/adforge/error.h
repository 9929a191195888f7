#pragma once

#include <stdexcept>
#include <string>

#include "adforge/real.h"

ADFORGE_NAMESPACE_BEGIN

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operand shapes do not conform.
class ShapeError : public Error {
public:
    using Error::Error;
};

// An op produced NaN or Inf.
class NonFiniteError : public Error {
public:
    using Error::Error;
};

// Token sequence (plus prefix) does not fit in max_seq.
class SequenceLengthError : public Error {
public:
    using Error::Error;
};

// Misuse of the tape (double backward, foreign var ids, ...).
class TapeError : public Error {
public:
    using Error::Error;
};

// Model/adapter configuration invalid or mismatched.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Dataset ingestion and label resolution problems.
class DataError : public Error {
public:
    using Error::Error;
};

class CheckpointError : public Error {
public:
    enum class Kind {
        kIo,
        kBadMagic,
        kVersionMismatch,
        kMalformedHeader,
        kTruncated,
        kLengthMismatch,
        kShapeTable,
    };

    CheckpointError(Kind kind, const std::string &what) : Error(what), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

ADFORGE_NAMESPACE_END
