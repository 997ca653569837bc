#pragma once

#include <stdexcept>
#include <string>

namespace fqilog {

// Exceptions thrown by the core. The C API maps each onto a status code.

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ChecksumError : DataError {
    using DataError::DataError;
};

struct VersionError : DataError {
    using DataError::DataError;
};

}  // namespace fqilog
