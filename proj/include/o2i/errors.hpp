#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace o2i {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Input parsed but violates an invariant (non-unit normal, label conflict, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain of a computation (grazing angle, negative thickness, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Unknown material, unconfigured band, bad config key.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace o2i
