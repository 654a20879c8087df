#pragma once

#include <stdexcept>
#include <string>

namespace cubevid {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid mapping rules, sweep specs, preset names or violated preconditions.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Arrays whose shapes disagree with their axes or with each other.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Values that cannot be encoded: non-finite input, out-of-range samples.
class DataError : public Error {
public:
    using Error::Error;
};

/// External encoder/decoder failures and corrupt or truncated streams.
class CodecError : public Error {
public:
    using Error::Error;
};

/// Malformed manifests, residual stores or raw cube files.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A referenced variable, file or executable does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

} // namespace cubevid
