#pragma once

#include <stdexcept>
#include <string>

namespace tdf {

// Invalid or inconsistent data: bad file contents, invariant violations,
// dimension mismatches between models and inputs.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem failures (open, read, write).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed configuration text or bad parameter values.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace tdf
