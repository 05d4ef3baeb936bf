#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wavemsa {

/// Base of every recoverable error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BoundsError : public Error {
public:
    using Error::Error;
};

/// Malformed FASTA or config input. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class SchemeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Instance too large for the configured cell or enumeration cap.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// A cell needed by the recurrence was not available. Inside the executor
/// this always indicates a protocol bug.
class DependencyError : public Error {
public:
    using Error::Error;
};

/// Two copies of the same global cell disagree after a parallel run.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// A worker failed; the message names the wave and partition.
class ExecutionError : public Error {
public:
    using Error::Error;
};

/// Caller broke a documented precondition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace wavemsa
