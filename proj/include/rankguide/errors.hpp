#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace rankguide {

/// Coarse error category; the CLI maps these to exit codes
/// (config -> 2, numerical -> 3, io -> 4).
enum class ErrorKind { Config, Numerical, Io };

/// Every library error carries a stable machine-readable code
/// (e.g. "DimMismatch") next to the human-readable message.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message),
          kind_(kind),
          code_(std::move(code)) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }
    [[nodiscard]] const std::string& code() const noexcept { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

[[nodiscard]] inline Error config_error(std::string code, const std::string& msg) {
    return Error(ErrorKind::Config, std::move(code), msg);
}

[[nodiscard]] inline Error numerical_error(std::string code, const std::string& msg) {
    return Error(ErrorKind::Numerical, std::move(code), msg);
}

[[nodiscard]] inline Error io_error(std::string code, const std::string& msg) {
    return Error(ErrorKind::Io, std::move(code), msg);
}

}  // namespace rankguide
