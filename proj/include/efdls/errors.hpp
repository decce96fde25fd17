#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace efdls {

// Base of every error raised by the library. Callers that only need a
// diagnostic can catch this; the subclasses exist so tests and the CLI can
// tell failure categories apart.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class StateError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DatasetError : public Error {
public:
    using Error::Error;
};

class IncompatibleBundleError : public Error {
public:
    using Error::Error;
};

class InsufficientUsersError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class MalformedMessageError : public Error {
public:
    MalformedMessageError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace efdls
