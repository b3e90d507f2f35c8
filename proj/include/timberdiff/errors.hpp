#pragma once

#include <stdexcept>
#include <string>

namespace timberdiff {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. Carries a human-readable location (line or byte offset).
class ParseError : public Error {
public:
    using Error::Error;
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")") {}
};

/// Structurally valid file whose contents violate the model invariants.
class SemanticError : public Error {
public:
    using Error::Error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class MissingNormals : public Error {
public:
    using Error::Error;
};

class InsufficientPoints : public Error {
public:
    using Error::Error;
};

class NoConsensus : public Error {
public:
    using Error::Error;
};

class NoCorrespondences : public Error {
public:
    using Error::Error;
};

class DegenerateConfiguration : public Error {
public:
    using Error::Error;
};

class NotApplicable : public Error {
public:
    using Error::Error;
};

class EmptyTarget : public Error {
public:
    using Error::Error;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

/// Thrown by the pipelines when coarse alignment cannot be established.
class RegistrationFailed : public Error {
public:
    using Error::Error;
};

}  // namespace timberdiff
