#pragma once

#include <stdexcept>
#include <string>

namespace specswap {

// Exit codes are part of the CLI contract.
enum class ExitCode : int { ok = 0, config = 2, numeric = 3, io = 4 };

// Bad parameter values, malformed config files, invalid bank geometry.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Contract violations and numerical failures (non-normalizable state,
// degenerate herald, decomposition failure).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace specswap
