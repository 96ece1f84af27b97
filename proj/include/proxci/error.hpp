#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace proxci {

// Machine-parsable failure categories. The CLI prints `error: <category>: <message>`.
enum class ErrorKind {
    Precondition,
    InvalidSpec,
    UnknownScenario,
    UnknownVariable,
    NonFinite,
    TooFewDistinctValues,
    EmptyBin,
    BinUnderflow,
    DimensionMismatch,
    SingularSystem,
    DegenerateInput,
    AssumptionViolation,
    GridMismatch,
    Io,
    Parse,
    Config,
    Usage,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) fail(kind, message);
}

}  // namespace proxci
