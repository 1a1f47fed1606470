#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace graphcp {

enum class ErrorKind {
    DuplicateEdge,
    SymmetricEdgePair,
    UnknownNodeReference,
    MalformedRow,
    MissingCell,
    NegativeCount,
    NonIntegerCount,
    DimensionMismatch,
    BadFractions,
    NonFiniteLoss,
    ExplosiveConfig,
    DegenerateData,
    InsufficientHistory,
    UnknownMethod,
    AlignmentError,
    NoEligibleNodes,
    ConfigError,
    IoError,
};

[[nodiscard]] std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for every recoverable failure in the library.
/// The kind lets the CLI map failures onto exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace graphcp
