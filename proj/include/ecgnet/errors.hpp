#pragma once

#include <stdexcept>
#include <string>

namespace ecgnet {

// Error categories map 1:1 onto CLI exit codes (see tools/).
// IoError: missing/unreadable/unwritable files.
// FormatError: malformed content, unsupported encodings, version mismatches.
// DataError: inputs that parse fine but cannot support the requested
// computation (too short, missing classes, empty batches, ...).

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

} // namespace ecgnet
