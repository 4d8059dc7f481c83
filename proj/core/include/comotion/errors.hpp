#pragma once

#include <stdexcept>
#include <string>

namespace comotion {

// Error with a stable machine-parsable code. The CLI prints "<code>: <message>"
// on a single line and exits nonzero.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& message) : Error("E_IO", message) {}
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& message) : Error("E_FORMAT", message) {}
};

class EmptyInputError : public Error {
public:
    explicit EmptyInputError(const std::string& message) : Error("E_EMPTY", message) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error("E_CONFIG", message) {}
};

}  // namespace comotion
